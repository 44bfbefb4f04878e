// Exception hierarchy shared across the library.

#ifndef CTRLSYNTH_ERRORS_HPP
#define CTRLSYNTH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ctrlsynth {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct dimension_mismatch : error {
  using error::error;
};

// a value fell outside the representable range of a fixed-point format
struct fixed_overflow : error {
  fixed_overflow(const std::string& what, double value, int direction)
      : error(what), value(value), direction(direction) {}
  double value;   // the unrepresentable value
  int direction;  // +1 overflow high, -1 overflow low
};

struct divisor_too_small : error {
  using error::error;
};

struct non_finite : error {
  using error::error;
};

struct singular_matrix : error {
  using error::error;
};

struct unstable_plant : error {
  using error::error;
};

struct repeated_eigenvalues : error {
  using error::error;
};

struct no_contraction_certificate : error {
  using error::error;
};

// no admissible decay rate can satisfy the accumulated constraints
struct infeasible_constraint : error {
  using error::error;
};

struct parse_error : error {
  using error::error;
};

struct validation_error : error {
  using error::error;
};

}  // namespace ctrlsynth

#endif
