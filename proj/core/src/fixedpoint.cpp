#include "ctrlsynth/fixedpoint.hpp"

#include <cmath>
#include <limits>

namespace ctrlsynth {

fixed_format::fixed_format(int integer_bits, int fraction_bits)
    : integer_bits(integer_bits), fraction_bits(fraction_bits) {
  if (integer_bits < 1 || fraction_bits < 0)
    throw error("fixed_format: need at least a sign bit and F >= 0");
  if (integer_bits + fraction_bits > 62)
    throw error("fixed_format: I + F > 62 does not fit the raw integer");
}

double fixed_format::step() const {
  return std::ldexp(1.0, -fraction_bits);
}

double fixed_format::max_magnitude() const {
  return static_cast<double>(max_raw()) * step();
}

std::int64_t fixed_format::max_raw() const {
  // (2^(I-1) + 1) * 2^F - 1
  return ((std::int64_t{1} << (integer_bits - 1)) + 1)
             * (std::int64_t{1} << fraction_bits)
         - 1;
}

std::string fixed_format::str() const {
  return "<" + std::to_string(integer_bits) + "," +
         std::to_string(fraction_bits) + ">";
}

fixed_value::fixed_value(std::int64_t raw, fixed_format format)
    : raw(raw), format(format) {
  if (raw > format.max_raw() || raw < -format.max_raw())
    throw fixed_overflow("fixed_value: raw outside format range",
                         static_cast<double>(raw) * format.step(),
                         raw > 0 ? 1 : -1);
}

double fixed_value::value() const {
  // exact: raw has at most 62 significant bits scaled by a power of two
  return std::ldexp(static_cast<double>(raw), -format.fraction_bits);
}

fixed_value quantize(double x, fixed_format fmt) {
  if (!std::isfinite(x)) throw non_finite("quantize: value is not finite");
  // scaling by 2^F is exact in binary64
  double scaled = std::ldexp(x, fmt.fraction_bits);
  double truncated = std::trunc(scaled);
  if (std::fabs(truncated) > static_cast<double>(fmt.max_raw()))
    throw fixed_overflow("quantize: magnitude exceeds format range", x,
                         x > 0 ? 1 : -1);
  return fixed_value(static_cast<std::int64_t>(truncated), fmt);
}

fixed_value quantize(double x, fixed_format fmt, double& delta) {
  fixed_value v = quantize(x, fmt);
  delta = x - v.value();
  return v;
}

fixed_value fp_add(const fixed_value& a, const fixed_value& b) {
  if (!(a.format == b.format))
    throw dimension_mismatch("fp_add: operand formats differ");
  std::int64_t sum = a.raw + b.raw;
  if (sum > a.format.max_raw() || sum < -a.format.max_raw())
    throw fixed_overflow("fp_add: sum exceeds format range",
                         static_cast<double>(sum) * a.format.step(),
                         sum > 0 ? 1 : -1);
  return fixed_value(sum, a.format);
}

fixed_value fp_mul(const fixed_value& a, const fixed_value& b) {
  if (!(a.format == b.format))
    throw dimension_mismatch("fp_mul: operand formats differ");
  // full 2F-bit product, one truncation toward zero back to F bits;
  // __int128 division truncates toward zero as required
  __int128 wide = static_cast<__int128>(a.raw) * static_cast<__int128>(b.raw);
  __int128 shifted = wide / (static_cast<__int128>(1) << a.format.fraction_bits);
  if (shifted > a.format.max_raw() || shifted < -a.format.max_raw())
    throw fixed_overflow("fp_mul: product exceeds format range",
                         a.value() * b.value(), wide > 0 ? 1 : -1);
  return fixed_value(static_cast<std::int64_t>(shifted), a.format);
}

double fp_div_error_bound(double c1, double c2, double delta1, double delta2) {
  if (c2 == 0.0) throw divisor_too_small("fp_div_error_bound: divisor is zero");
  if (std::fabs(delta2) >= std::fabs(c2))
    throw divisor_too_small(
        "fp_div_error_bound: truncation error as large as the divisor");
  if (delta2 == 0.0) {
    if (delta1 == 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  double numerator = delta2 * c1 - delta1 * c2;
  double denominator = delta2 * delta2 - delta2 * c2;
  return std::fabs(numerator / denominator);
}

fixed_dot_result dot_fixed(const std::vector<fixed_value>& k,
                           const std::vector<fixed_value>& x) {
  if (k.empty() || k.size() != x.size())
    throw dimension_mismatch("dot_fixed: operand lengths differ or are zero");
  const fixed_format fmt = k.front().format;
  for (const auto& v : k)
    if (!(v.format == fmt)) throw dimension_mismatch("dot_fixed: mixed formats");
  for (const auto& v : x)
    if (!(v.format == fmt)) throw dimension_mismatch("dot_fixed: mixed formats");

  fixed_value acc = fp_mul(k[0], x[0]);
  for (std::size_t i = 1; i < k.size(); ++i)
    acc = fp_add(acc, fp_mul(k[i], x[i]));
  return {acc, static_cast<double>(k.size()) * fmt.step()};
}

}  // namespace ctrlsynth
