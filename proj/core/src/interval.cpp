#include "ctrlsynth/interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctrlsynth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double next_down(double x) {
  return std::nextafter(x, -kInf);
}

double next_up(double x) {
  return std::nextafter(x, kInf);
}

// Knuth TwoSum: s + err == a + b exactly
double two_sum_err(double a, double b, double s) {
  double bb = s - a;
  return (a - (s - bb)) + (b - bb);
}

// fma residual: p + err == a * b exactly, provided neither the product nor
// the residual falls into the subnormal range
double two_prod_err(double a, double b, double p) {
  return std::fma(a, b, -p);
}

// below this magnitude the fma residual may itself round; widen untrusted
constexpr double kExactLimit = 1e-290;

bool product_trustworthy(double p) {
  return std::isfinite(p) && (p == 0.0 || std::fabs(p) > kExactLimit);
}

void check_finite(double x) {
  if (!std::isfinite(x)) throw non_finite("interval endpoint is not finite");
}

}  // namespace

double add_down(double a, double b) {
  double s = a + b;
  check_finite(s);
  return two_sum_err(a, b, s) < 0.0 ? next_down(s) : s;
}

double add_up(double a, double b) {
  double s = a + b;
  check_finite(s);
  return two_sum_err(a, b, s) > 0.0 ? next_up(s) : s;
}

double sub_down(double a, double b) {
  return add_down(a, -b);
}

double sub_up(double a, double b) {
  return add_up(a, -b);
}

double mul_down(double a, double b) {
  double p = a * b;
  check_finite(p);
  if (!product_trustworthy(p)) return next_down(p);
  return two_prod_err(a, b, p) < 0.0 ? next_down(p) : p;
}

double mul_up(double a, double b) {
  double p = a * b;
  check_finite(p);
  if (!product_trustworthy(p)) return next_up(p);
  return two_prod_err(a, b, p) > 0.0 ? next_up(p) : p;
}

// residual of q = a / b: a - q * b has the sign of the omitted remainder, so
// the true quotient is q + residual / b
double div_down(double a, double b) {
  double q = a / b;
  check_finite(q);
  if (!product_trustworthy(q * b)) return next_down(q);
  double r = std::fma(-q, b, a);
  if (r == 0.0) return q;
  return (r < 0.0) == (b > 0.0) ? next_down(q) : q;
}

double div_up(double a, double b) {
  double q = a / b;
  check_finite(q);
  if (!product_trustworthy(q * b)) return next_up(q);
  double r = std::fma(-q, b, a);
  if (r == 0.0) return q;
  return (r > 0.0) == (b > 0.0) ? next_up(q) : q;
}

interval::interval(double lo, double hi) : lo(lo), hi(hi) {
  if (!(lo <= hi)) throw error("interval bounds out of order");
  check_finite(lo);
  check_finite(hi);
}

interval interval::centered(double mid, double rad) {
  if (rad < 0.0) throw error("negative interval radius");
  return interval(sub_down(mid, rad), add_up(mid, rad));
}

double interval::rad() const {
  double m = mid();
  return std::max(sub_up(hi, m), sub_up(m, lo));
}

double interval::mag() const {
  return std::max(std::fabs(lo), std::fabs(hi));
}

double interval::mig() const {
  if (contains_zero()) return 0.0;
  return std::min(std::fabs(lo), std::fabs(hi));
}

interval operator+(const interval& a, const interval& b) {
  interval r;
  r.lo = add_down(a.lo, b.lo);
  r.hi = add_up(a.hi, b.hi);
  return r;
}

interval operator-(const interval& a, const interval& b) {
  interval r;
  r.lo = sub_down(a.lo, b.hi);
  r.hi = sub_up(a.hi, b.lo);
  return r;
}

interval operator-(const interval& a) {
  interval r;
  r.lo = -a.hi;
  r.hi = -a.lo;
  return r;
}

interval operator*(const interval& a, const interval& b) {
  double lo = std::min(std::min(mul_down(a.lo, b.lo), mul_down(a.lo, b.hi)),
                       std::min(mul_down(a.hi, b.lo), mul_down(a.hi, b.hi)));
  double hi = std::max(std::max(mul_up(a.lo, b.lo), mul_up(a.lo, b.hi)),
                       std::max(mul_up(a.hi, b.lo), mul_up(a.hi, b.hi)));
  interval r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

interval operator/(const interval& a, const interval& b) {
  if (b.contains_zero()) throw error("interval division by zero");
  double lo = std::min(std::min(div_down(a.lo, b.lo), div_down(a.lo, b.hi)),
                       std::min(div_down(a.hi, b.lo), div_down(a.hi, b.hi)));
  double hi = std::max(std::max(div_up(a.lo, b.lo), div_up(a.lo, b.hi)),
                       std::max(div_up(a.hi, b.lo), div_up(a.hi, b.hi)));
  interval r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

interval hull(const interval& a, const interval& b) {
  interval r;
  r.lo = std::min(a.lo, b.lo);
  r.hi = std::max(a.hi, b.hi);
  return r;
}

interval intersect(const interval& a, const interval& b) {
  double lo = std::max(a.lo, b.lo);
  double hi = std::min(a.hi, b.hi);
  if (lo > hi) throw error("empty interval intersection");
  interval r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

interval abs(const interval& a) {
  interval r;
  if (a.lo >= 0.0) return a;
  if (a.hi <= 0.0) return -a;
  r.lo = 0.0;
  r.hi = a.mag();
  return r;
}

box box::centered(const Eigen::VectorXd& mid, const Eigen::VectorXd& rad) {
  if (mid.size() != rad.size()) throw dimension_mismatch("box::centered");
  box b(static_cast<std::size_t>(mid.size()));
  for (Eigen::Index i = 0; i < mid.size(); ++i)
    b.dims[static_cast<std::size_t>(i)] = interval::centered(mid[i], rad[i]);
  return b;
}

box box::symmetric(const Eigen::VectorXd& rad) {
  return centered(Eigen::VectorXd::Zero(rad.size()), rad);
}

bool box::contains(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dims.size())
    throw dimension_mismatch("box::contains");
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (!dims[i].contains(x[static_cast<Eigen::Index>(i)])) return false;
  return true;
}

bool box::contains(const box& other) const {
  if (other.size() != size()) throw dimension_mismatch("box::contains");
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (!dims[i].contains(other.dims[i])) return false;
  return true;
}

double box::radius() const {
  double r = 0.0;
  for (const interval& d : dims) r = std::max(r, d.mag());
  return r;
}

box hull(const box& a, const box& b) {
  if (a.size() != b.size()) throw dimension_mismatch("box hull");
  box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = hull(a[i], b[i]);
  return r;
}

box box_sum(const box& a, const box& b) {
  if (a.size() != b.size()) throw dimension_mismatch("box sum");
  box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

std::vector<Eigen::VectorXd> vertices(const box& b) {
  std::size_t n = b.size();
  if (n > 24) throw error("vertex enumeration over more than 24 dimensions");
  std::vector<Eigen::VectorXd> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      bool high = (mask >> (n - 1 - i)) & 1u;
      v[static_cast<Eigen::Index>(i)] = high ? b[i].hi : b[i].lo;
    }
    out.push_back(std::move(v));
  }
  return out;
}

interval_matrix interval_matrix::exact(const Eigen::MatrixXd& m) {
  interval_matrix r(static_cast<std::size_t>(m.rows()),
                    static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          interval(m(i, j));
  return r;
}

interval_matrix interval_matrix::centered(const Eigen::MatrixXd& mid,
                                          const Eigen::MatrixXd& rad) {
  if (mid.rows() != rad.rows() || mid.cols() != rad.cols())
    throw dimension_mismatch("interval_matrix::centered");
  interval_matrix r(static_cast<std::size_t>(mid.rows()),
                    static_cast<std::size_t>(mid.cols()));
  for (Eigen::Index i = 0; i < mid.rows(); ++i)
    for (Eigen::Index j = 0; j < mid.cols(); ++j)
      r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          interval::centered(mid(i, j), rad(i, j));
  return r;
}

interval_matrix interval_matrix::identity(std::size_t n) {
  interval_matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) r(i, i) = interval(1.0);
  return r;
}

Eigen::MatrixXd interval_matrix::midpoint() const {
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (*this)(i, j).mid();
  return m;
}

Eigen::MatrixXd interval_matrix::radius() const {
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (*this)(i, j).rad();
  return m;
}

double interval_matrix::inf_norm_upper() const {
  double norm = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < cols; ++j) row = add_up(row, (*this)(i, j).mag());
    norm = std::max(norm, row);
  }
  return norm;
}

interval_matrix operator+(const interval_matrix& a, const interval_matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw dimension_mismatch("interval_matrix addition");
  interval_matrix r(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) r.data[i] = a.data[i] + b.data[i];
  return r;
}

interval_matrix operator-(const interval_matrix& a, const interval_matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw dimension_mismatch("interval_matrix subtraction");
  interval_matrix r(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) r.data[i] = a.data[i] - b.data[i];
  return r;
}

interval_matrix operator*(const interval_matrix& a, const interval_matrix& b) {
  if (a.cols != b.rows) throw dimension_mismatch("interval_matrix product");
  interval_matrix r(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      interval acc;
      for (std::size_t k = 0; k < a.cols; ++k) acc = acc + a(i, k) * b(k, j);
      r(i, j) = acc;
    }
  return r;
}

box operator*(const interval_matrix& a, const box& x) {
  if (a.cols != x.size()) throw dimension_mismatch("interval matrix-vector");
  box r(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    interval acc;
    for (std::size_t j = 0; j < a.cols; ++j) acc = acc + a(i, j) * x[j];
    r[i] = acc;
  }
  return r;
}

box box_step(const interval_matrix& a_cl, const box& x, const box& noise) {
  box image = a_cl * x;
  if (noise.size() == 0) return image;
  if (noise.size() != image.size()) throw dimension_mismatch("box_step noise");
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = image[i] + noise[i];
  return image;
}

interval_matrix solve(const interval_matrix& a, const interval_matrix& b) {
  if (a.rows != a.cols) throw dimension_mismatch("solve: square matrix required");
  if (a.rows != b.rows) throw dimension_mismatch("solve: rhs rows");
  std::size_t n = a.rows;
  interval_matrix lhs = a;
  interval_matrix rhs = b;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    // pivot: the row whose interval is farthest from zero
    std::size_t best = col;
    double best_mig = lhs(perm[col], col).mig();
    for (std::size_t r = col + 1; r < n; ++r) {
      double m = lhs(perm[r], col).mig();
      if (m > best_mig) {
        best = r;
        best_mig = m;
      }
    }
    if (best_mig == 0.0)
      throw singular_matrix("interval pivot straddles zero");
    std::swap(perm[col], perm[best]);

    const interval pivot = lhs(perm[col], col);
    for (std::size_t r = col + 1; r < n; ++r) {
      interval factor = lhs(perm[r], col) / pivot;
      lhs(perm[r], col) = interval(0.0);
      for (std::size_t c = col + 1; c < n; ++c)
        lhs(perm[r], c) = lhs(perm[r], c) - factor * lhs(perm[col], c);
      for (std::size_t c = 0; c < rhs.cols; ++c)
        rhs(perm[r], c) = rhs(perm[r], c) - factor * rhs(perm[col], c);
    }
  }

  interval_matrix out(n, b.cols);
  for (std::size_t c = 0; c < b.cols; ++c) {
    for (std::size_t i = n; i-- > 0;) {
      interval acc = rhs(perm[i], c);
      for (std::size_t j = i + 1; j < n; ++j)
        acc = acc - lhs(perm[i], j) * out(j, c);
      out(i, c) = acc / lhs(perm[i], i);
    }
  }
  return out;
}

interval_matrix inverse(const interval_matrix& a) {
  return solve(a, interval_matrix::identity(a.rows));
}

}  // namespace ctrlsynth
