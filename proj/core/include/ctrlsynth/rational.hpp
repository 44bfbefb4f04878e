// Exact rational arithmetic helpers.  Every finite binary64 value is a
// dyadic rational, so closed-loop matrices assembled from doubles and
// fixed-point gains convert losslessly; the stability tests below run on
// those exact representations and never see rounding.

#ifndef CTRLSYNTH_RATIONAL_HPP
#define CTRLSYNTH_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Dense>
#include <vector>

#include "ctrlsynth/errors.hpp"

namespace ctrlsynth {

using rational = boost::multiprecision::cpp_rational;

// exact conversion; throws non_finite for NaN or infinity
rational to_rational(double x);
double to_double(const rational& r);

// dense rational matrix, row-major.  The operators are hidden friends so
// unrelated Eigen expressions never probe conversions into rational.
struct rat_matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<rational> data;

  rat_matrix() = default;
  rat_matrix(std::size_t rows, std::size_t cols)
      : rows(rows), cols(cols), data(rows * cols) {}

  static rat_matrix from(const Eigen::MatrixXd& m);
  static rat_matrix identity(std::size_t n);

  rational& operator()(std::size_t i, std::size_t j) {
    return data[i * cols + j];
  }
  const rational& operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }

  rational trace() const;
  Eigen::MatrixXd to_double() const;

  friend rat_matrix operator+(const rat_matrix& a, const rat_matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
      throw dimension_mismatch("rat_matrix addition");
    rat_matrix r(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      r.data[i] = a.data[i] + b.data[i];
    return r;
  }

  friend rat_matrix operator-(const rat_matrix& a, const rat_matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
      throw dimension_mismatch("rat_matrix subtraction");
    rat_matrix r(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      r.data[i] = a.data[i] - b.data[i];
    return r;
  }

  friend rat_matrix operator*(const rat_matrix& a, const rat_matrix& b) {
    if (a.cols != b.rows) throw dimension_mismatch("rat_matrix product");
    rat_matrix r(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.cols; ++j) {
        rational acc = 0;
        for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
        r(i, j) = acc;
      }
    return r;
  }

  friend rat_matrix operator*(const rational& s, const rat_matrix& a) {
    rat_matrix r(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) r.data[i] = s * a.data[i];
    return r;
  }

  friend std::vector<rational> operator*(const rat_matrix& a,
                                         const std::vector<rational>& x) {
    if (a.cols != x.size())
      throw dimension_mismatch("rat_matrix vector product");
    std::vector<rational> r(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
      rational acc = 0;
      for (std::size_t j = 0; j < a.cols; ++j) acc += a(i, j) * x[j];
      r[i] = acc;
    }
    return r;
  }
};

}  // namespace ctrlsynth

#endif
