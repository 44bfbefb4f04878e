#include "ctrlsynth/rational.hpp"

#include <cmath>

namespace ctrlsynth {

rational to_rational(double x) {
  if (!std::isfinite(x)) throw non_finite("cannot represent non-finite value");
  if (x == 0.0) return rational(0);
  int exp = 0;
  double mant = std::frexp(x, &exp);  // x = mant * 2^exp, 0.5 <= |mant| < 1
  auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  boost::multiprecision::cpp_int num = scaled;
  boost::multiprecision::cpp_int den = 1;
  if (exp >= 0)
    num <<= exp;
  else
    den <<= -exp;
  return rational(num, den);
}

double to_double(const rational& r) { return r.convert_to<double>(); }

rat_matrix rat_matrix::from(const Eigen::MatrixXd& m) {
  rat_matrix r(static_cast<std::size_t>(m.rows()),
               static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < r.rows; ++i)
    for (std::size_t j = 0; j < r.cols; ++j)
      r(i, j) = to_rational(m(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j)));
  return r;
}

rat_matrix rat_matrix::identity(std::size_t n) {
  rat_matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) r(i, i) = 1;
  return r;
}

rational rat_matrix::trace() const {
  rational acc = 0;
  for (std::size_t i = 0; i < rows && i < cols; ++i) acc += (*this)(i, i);
  return acc;
}

Eigen::MatrixXd rat_matrix::to_double() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          ctrlsynth::to_double((*this)(i, j));
  return m;
}

}  // namespace ctrlsynth
