#include "ctrlsynth/stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctrlsynth {

char_poly::char_poly(std::vector<rational> coeffs_in)
    : coeffs(std::move(coeffs_in)) {
  if (coeffs.empty() || coeffs.front() != 1)
    throw validation_error("char_poly: monic polynomial required");
}

char_poly char_poly::of(const rat_matrix& a) {
  if (a.rows != a.cols) throw dimension_mismatch("char_poly: square matrix");
  const std::size_t n = a.rows;
  std::vector<rational> c;
  c.reserve(n + 1);
  c.push_back(1);
  // Faddeev-LeVerrier: M_1 = A, c_k = -tr(M_k)/k, M_{k+1} = A(M_k + c_k I)
  rat_matrix m = a;
  for (std::size_t k = 1; k <= n; ++k) {
    rational ck = -m.trace() / static_cast<int>(k);
    c.push_back(ck);
    if (k == n) break;
    rat_matrix shifted = m;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) += ck;
    m = a * shifted;
  }
  return char_poly(std::move(c));
}

char_poly char_poly::of(const Eigen::MatrixXd& a) {
  return of(rat_matrix::from(a));
}

Eigen::VectorXd char_poly::to_doubles() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = to_double(coeffs[i]);
  return v;
}

bool jury_check(const char_poly& p) {
  // Schur-Cohn reduction: p stable iff |p_n| < p_0 and the reduced
  // polynomial q_j = p_0 p_j - p_n p_{n-j} is stable; run to degree zero
  std::vector<rational> cur = p.coeffs;
  while (cur.size() > 1) {
    const rational& lead = cur.front();
    const rational& tail = cur.back();
    if (lead <= 0) return false;
    if (abs(tail) >= lead) return false;
    std::size_t n = cur.size() - 1;
    std::vector<rational> next(n);
    for (std::size_t j = 0; j < n; ++j)
      next[j] = lead * cur[j] - tail * cur[n - j];
    cur = std::move(next);
  }
  return true;
}

bool jury_check_margin(const char_poly& p, double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw validation_error("jury margin: rho must lie in (0, 1]");
  if (rho == 1.0) return jury_check(p);
  // p(rho z) / rho^n is monic with coefficients c_i / rho^i
  rational r = to_rational(rho);
  std::vector<rational> scaled(p.coeffs.size());
  rational denom = 1;
  for (std::size_t i = 0; i < p.coeffs.size(); ++i) {
    scaled[i] = p.coeffs[i] / denom;
    denom *= r;
  }
  return jury_check(char_poly(std::move(scaled)));
}

std::vector<std::complex<double>> poly_roots(const char_poly& p) {
  using long_matrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const std::size_t n = p.degree();
  std::vector<std::complex<double>> roots;
  if (n == 0) return roots;
  long_matrix companion = long_matrix::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i + 1 < n; ++i)
    companion(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) =
        1.0L;
  for (std::size_t i = 0; i < n; ++i)
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) =
        -p.coeffs[n - i].convert_to<long double>();
  Eigen::EigenSolver<long_matrix> solver(companion);
  roots.reserve(n);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const auto& ev = solver.eigenvalues()[i];
    roots.emplace_back(static_cast<double>(ev.real()),
                       static_cast<double>(ev.imag()));
  }
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& a) {
  return poly_roots(char_poly::of(a));
}

double certified_power_norm(const Eigen::MatrixXd& a, int power) {
  if (power < 1) throw validation_error("certified_power_norm: power >= 1");
  interval_matrix base = interval_matrix::exact(a);
  interval_matrix acc = base;
  for (int i = 1; i < power; ++i) acc = acc * base;
  return acc.inf_norm_upper();
}

completeness_threshold completeness_bound(const Eigen::MatrixXd& a_cl,
                                          double t_s, double box_ratio) {
  if (!(t_s > 0.0)) throw validation_error("completeness bound: T_s > 0");
  if (!(box_ratio > 0.0 && box_ratio <= 1.0))
    throw validation_error("completeness bound: box ratio must lie in (0, 1]");
  char_poly p = char_poly::of(a_cl);
  if (!jury_check(p))
    throw unstable_plant("completeness bound: closed loop is not Jury-stable");
  std::vector<std::complex<double>> roots = poly_roots(p);
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j)
      if (std::abs(roots[i] - roots[j]) < 1e-9)
        throw repeated_eigenvalues(
            "completeness bound: eigenvalues coincide within 1e-9");

  completeness_threshold out;
  double min_arg = 0.0;
  bool any_complex = false;
  for (const auto& z : roots) {
    if (z.imag() != 0.0) any_complex = true;
    double arg = std::fabs(std::arg(z));
    if (arg > 0.0 && (min_arg == 0.0 || arg < min_arg)) min_arg = arg;
  }

  // smallest power with a certified contraction of the weighted box
  interval_matrix base = interval_matrix::exact(a_cl);
  interval_matrix acc = base;
  int j_star = -1;
  constexpr int kPowerLimit = 20000;
  for (int j = 1; j <= kPowerLimit; ++j) {
    if (acc.inf_norm_upper() < box_ratio) {
      j_star = j;
      break;
    }
    acc = acc * base;
  }
  if (j_star < 0)
    throw unstable_plant(
        "completeness bound: no certified power contraction within limit");

  if (any_complex) {
    out.basis = completeness_threshold::basis_kind::complex_rotation;
    out.theta = min_arg;
    int rotation =
        static_cast<int>(std::ceil(2.0 * std::numbers::pi / min_arg));
    out.k_bar = std::max(rotation, j_star);
  } else {
    out.basis = completeness_threshold::basis_kind::real_monotone;
    out.theta = 0.0;
    out.k_bar = j_star;
  }
  return out;
}

box fwl_convergence_set(const discrete_plant& plant, const controller& ctrl,
                        double delta) {
  if (delta < 0.0)
    throw validation_error("convergence set: delta must be nonnegative");
  const std::size_t n = plant.n();
  // I - A_cl, with A_d and B_d carrying their certified radii
  interval_matrix acl = closed_loop_interval(plant, ctrl);
  interval_matrix lhs = interval_matrix::identity(n) - acl;
  interval_matrix bk(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    interval bi = interval::centered(plant.B_d(static_cast<Eigen::Index>(i), 0),
                                     plant.b_rad(static_cast<Eigen::Index>(i), 0));
    for (std::size_t j = 0; j < n; ++j)
      bk(i, j) = bi * interval(ctrl.k[j].value());
  }
  interval_matrix gain = solve(lhs, bk);
  box disturbance(n);
  for (std::size_t i = 0; i < n; ++i)
    disturbance[i] = interval(-delta, delta);
  box image = gain * disturbance;
  // symmetric hull
  for (std::size_t i = 0; i < n; ++i) {
    double m = image[i].mag();
    image[i] = interval(-m, m);
  }
  return image;
}

}  // namespace ctrlsynth
