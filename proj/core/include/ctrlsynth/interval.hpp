// Outward-rounded interval arithmetic on binary64 endpoints, plus the small
// box and interval-matrix containers used by the verification back-ends.
//
// Directed rounding is obtained from error-free transforms (TwoSum / fma
// residuals): a result is widened by one ulp only when the rounding error of
// the default-rounded operation is nonzero in the offending direction, so
// exact operations (adding zero, scaling by powers of two, ...) keep their
// endpoints bit-for-bit.

#ifndef CTRLSYNTH_INTERVAL_HPP
#define CTRLSYNTH_INTERVAL_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "ctrlsynth/errors.hpp"

namespace ctrlsynth {

// directed-rounding scalar kernels
double add_down(double a, double b);
double add_up(double a, double b);
double sub_down(double a, double b);
double sub_up(double a, double b);
double mul_down(double a, double b);
double mul_up(double a, double b);
double div_down(double a, double b);
double div_up(double a, double b);

struct interval {
  double lo = 0.0;
  double hi = 0.0;

  interval() = default;
  explicit interval(double point) : lo(point), hi(point) {}
  interval(double lo, double hi);

  static interval centered(double mid, double rad);

  double mid() const { return 0.5 * (lo + hi); }
  double rad() const;
  double width() const { return sub_up(hi, lo); }
  // largest absolute value over the interval
  double mag() const;
  // smallest absolute value over the interval (0 if it straddles zero)
  double mig() const;

  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains(const interval& other) const {
    return lo <= other.lo && other.hi <= hi;
  }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
};

interval operator+(const interval& a, const interval& b);
interval operator-(const interval& a, const interval& b);
interval operator-(const interval& a);
interval operator*(const interval& a, const interval& b);
interval operator/(const interval& a, const interval& b);  // throws if 0 in b
interval hull(const interval& a, const interval& b);
interval intersect(const interval& a, const interval& b);  // throws if empty
interval abs(const interval& a);

// axis-aligned box: one interval per state coordinate
struct box {
  std::vector<interval> dims;

  box() = default;
  explicit box(std::size_t n) : dims(n) {}
  explicit box(std::vector<interval> dims) : dims(std::move(dims)) {}
  static box centered(const Eigen::VectorXd& mid, const Eigen::VectorXd& rad);
  static box symmetric(const Eigen::VectorXd& rad);

  std::size_t size() const { return dims.size(); }
  interval& operator[](std::size_t i) { return dims[i]; }
  const interval& operator[](std::size_t i) const { return dims[i]; }

  bool contains(const Eigen::VectorXd& x) const;
  bool contains(const box& other) const;
  // max over coordinates of max(|lo|, |hi|)
  double radius() const;
};

box hull(const box& a, const box& b);
// per-coordinate interval sum (Minkowski sum of the boxes)
box box_sum(const box& a, const box& b);

// all 2^n corner points in lexicographic sign order: the first vertex takes
// every lower bound, the last every upper bound, and the last coordinate
// varies fastest.
std::vector<Eigen::VectorXd> vertices(const box& b);

// dense interval matrix, row-major
struct interval_matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<interval> data;

  interval_matrix() = default;
  interval_matrix(std::size_t rows, std::size_t cols)
      : rows(rows), cols(cols), data(rows * cols) {}

  static interval_matrix exact(const Eigen::MatrixXd& m);
  static interval_matrix centered(const Eigen::MatrixXd& mid,
                                  const Eigen::MatrixXd& rad);
  static interval_matrix identity(std::size_t n);

  interval& operator()(std::size_t i, std::size_t j) {
    return data[i * cols + j];
  }
  const interval& operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }

  Eigen::MatrixXd midpoint() const;
  Eigen::MatrixXd radius() const;
  // upper bound of the induced infinity norm (max row sum of magnitudes)
  double inf_norm_upper() const;
};

interval_matrix operator+(const interval_matrix& a, const interval_matrix& b);
interval_matrix operator-(const interval_matrix& a, const interval_matrix& b);
interval_matrix operator*(const interval_matrix& a, const interval_matrix& b);
box operator*(const interval_matrix& a, const box& x);

// one iteration of x' = A x + noise with full outward rounding
box box_step(const interval_matrix& a_cl, const box& x, const box& noise);

// solves A X = B by interval Gaussian elimination; throws singular_matrix if
// every pivot candidate of some column straddles zero
interval_matrix solve(const interval_matrix& a, const interval_matrix& b);
interval_matrix inverse(const interval_matrix& a);

}  // namespace ctrlsynth

#endif
