// Signed fixed-point arithmetic with truncation toward zero, mirroring the
// controller and plant word-level semantics.  A format <I,F> spends I bits
// left of the binary point (sign included) and F bits right of it; values are
// raw * 2^-F with |value| <= 2^(I-1) + 1 - 2^-F.  No rounding mode other than
// truncation is offered: every dropped bit biases toward zero, and all error
// bounds below assume exactly that.

#ifndef CTRLSYNTH_FIXEDPOINT_HPP
#define CTRLSYNTH_FIXEDPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ctrlsynth/errors.hpp"

namespace ctrlsynth {

struct fixed_format {
  int integer_bits = 8;
  int fraction_bits = 8;

  fixed_format() = default;
  fixed_format(int integer_bits, int fraction_bits);

  // machine epsilon of the format: one unit in the last place
  double step() const;
  // largest representable magnitude, 2^(I-1) + 1 - 2^-F
  double max_magnitude() const;
  std::int64_t max_raw() const;

  bool operator==(const fixed_format&) const = default;
  std::string str() const;  // "<I,F>"
};

struct fixed_value {
  std::int64_t raw = 0;
  fixed_format format;

  fixed_value() = default;
  fixed_value(std::int64_t raw, fixed_format format);

  double value() const;
  bool operator==(const fixed_value&) const = default;
};

// nearest representable value not exceeding |x| (truncation toward zero);
// throws fixed_overflow when |x| exceeds the format range, non_finite for
// NaN or infinity.  The discarded amount delta = x - result satisfies
// 0 <= |delta| < step() and sign(delta) == sign(x).
fixed_value quantize(double x, fixed_format fmt);
fixed_value quantize(double x, fixed_format fmt, double& delta);

// exact: raw addition with a range check
fixed_value fp_add(const fixed_value& a, const fixed_value& b);

// double-width product truncated once back to the operand format; the
// truncation discards less than one step()
fixed_value fp_mul(const fixed_value& a, const fixed_value& b);

// worst-case error of dividing already-truncated operands: with c1, c2 the
// real operands and delta1, delta2 their truncation errors, returns
// |(delta2 c1 - delta1 c2) / (delta2^2 - delta2 c2)|.  Requires
// |delta2| < |c2|; an exactly represented divisor (delta2 == 0) yields 0 when
// the dividend is exact too and +infinity otherwise (the bound degenerates).
// The controller itself never divides; this feeds plant-precision analysis.
double fp_div_error_bound(double c1, double c2, double delta1, double delta2);

// K . x evaluated left-to-right by ascending index: n products, n-1 exact
// additions.  Reports the accumulated truncation budget: the result differs
// from the exact dot product of the stored values by at most n * step().
struct fixed_dot_result {
  fixed_value value;
  double error_bound = 0.0;
};
fixed_dot_result dot_fixed(const std::vector<fixed_value>& k,
                           const std::vector<fixed_value>& x);

}  // namespace ctrlsynth

#endif
