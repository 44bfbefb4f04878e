#include "ctrlsynth/stability.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ctrlsynth/errors.hpp"

using namespace ctrlsynth;

namespace {

double splitmix(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

char_poly poly_from(const std::vector<double>& tail) {
  std::vector<rational> c{rational(1)};
  for (const double v : tail) c.push_back(to_rational(v));
  return char_poly(std::move(c));
}

// companion-matrix eigenvalues of a monic polynomial, plain double QR
std::vector<std::complex<double>> companion_roots(
    const std::vector<double>& tail) {
  const int n = static_cast<int>(tail.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) c(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) c(0, i) = -tail[static_cast<std::size_t>(i)];
  Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
  std::vector<std::complex<double>> roots;
  for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()[i]);
  return roots;
}

}  // namespace

TEST_CASE("characteristic polynomial is exact") {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.0, -0.25, 1.0;
  const char_poly p = char_poly::of(a);
  REQUIRE(p.degree() == 2);
  CHECK(p.coeffs[0] == rational(1));
  CHECK(p.coeffs[1] == rational(-1));
  CHECK(p.coeffs[2] == rational(1, 4));

  const char_poly q = char_poly::of(rat_matrix::from(a));
  CHECK(q.coeffs == p.coeffs);

  const Eigen::VectorXd d = p.to_doubles();
  CHECK(d[0] == 1.0);
  CHECK(d[2] == 0.25);
}

TEST_CASE("strict unit-circle test on pinned polynomials") {
  CHECK(jury_check(poly_from({-0.5})));         // root 0.5
  CHECK(!jury_check(poly_from({-1.0})));        // root on the circle
  CHECK(!jury_check(poly_from({1.0})));         // root -1
  CHECK(!jury_check(poly_from({-1.5})));        // root outside
  CHECK(jury_check(poly_from({-1.0, 0.5})));    // 0.5 +- 0.5i, |z|^2 = 0.5
  CHECK(!jury_check(poly_from({-1.9, 0.9})));   // roots 1 and 0.9
  CHECK(jury_check(poly_from({0.05, -0.855})));  // roots 0.9 and -0.95
  // (z - 0.5)^5
  CHECK(jury_check(poly_from({-2.5, 2.5, -1.25, 0.3125, -0.03125})));
  // constant polynomial has no roots to place outside
  CHECK(jury_check(char_poly({rational(1)})));
}

TEST_CASE("margin variant rescales the circle exactly") {
  const char_poly p = poly_from({-0.5});  // root 0.5
  CHECK(jury_check_margin(p, 0.6));
  CHECK(!jury_check_margin(p, 0.4));
  CHECK(!jury_check_margin(p, 0.5));  // strict inequality at the boundary
  const char_poly r = poly_from({-1.0, 0.5});  // |roots| = sqrt(0.5)
  CHECK(jury_check_margin(r, 0.71));
  CHECK(!jury_check_margin(r, 0.70));
}

TEST_CASE("jury agrees with companion roots on random polynomials") {
  std::uint64_t s = 42;
  int tested = 0;
  while (tested < 300) {
    const int deg = 1 + static_cast<int>(splitmix(s) * 5.0);
    std::vector<double> tail;
    for (int i = 0; i < deg; ++i) tail.push_back((splitmix(s) - 0.5) * 4.0);
    const auto roots = companion_roots(tail);
    bool near_circle = false;
    bool all_inside = true;
    for (const auto& z : roots) {
      if (std::abs(std::abs(z) - 1.0) < 1e-6) near_circle = true;
      if (std::abs(z) >= 1.0) all_inside = false;
    }
    if (near_circle) continue;
    REQUIRE(jury_check(poly_from(tail)) == all_inside);
    ++tested;
  }
}

TEST_CASE("advisory root finders") {
  // (z - 0.25)(z - 0.5)(z + 0.75)
  const char_poly p =
      poly_from({-0.0, -0.40625, 0.09375});
  auto roots = poly_roots(p);
  std::vector<double> re;
  for (const auto& z : roots) {
    CHECK(std::abs(z.imag()) < 1e-9);
    re.push_back(z.real());
  }
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-0.75).epsilon(1e-9));
  CHECK(re[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(re[2] == doctest::Approx(0.5).epsilon(1e-9));

  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.0, 0.0, -0.25;
  auto eig = eigenvalues(a);
  std::vector<double> ev{eig[0].real(), eig[1].real()};
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("completeness bound basics") {
  Eigen::MatrixXd real_loop(1, 1);
  real_loop << 0.5;
  const completeness_threshold ct = completeness_bound(real_loop, 0.1);
  CHECK(ct.basis == completeness_threshold::basis_kind::real_monotone);
  CHECK(ct.theta == 0.0);
  CHECK(ct.k_bar >= 1);

  // 0.9 times a quarter-pi rotation: full revolutions need eight steps
  const double c = 0.9 * std::cos(std::acos(-1.0) / 4.0);
  const double s = 0.9 * std::sin(std::acos(-1.0) / 4.0);
  Eigen::MatrixXd rot(2, 2);
  rot << c, s, -s, c;
  const completeness_threshold cr = completeness_bound(rot, 0.1);
  CHECK(cr.basis == completeness_threshold::basis_kind::complex_rotation);
  CHECK(cr.theta == doctest::Approx(std::acos(-1.0) / 4.0).epsilon(1e-9));
  CHECK(cr.k_bar >= 8);

  // a tighter aspect ratio can only deepen the bound
  CHECK(completeness_bound(rot, 0.1, 0.1).k_bar >=
        completeness_bound(rot, 0.1, 1.0).k_bar);

  Eigen::MatrixXd unstable(1, 1);
  unstable << 1.1;
  CHECK_THROWS_AS(completeness_bound(unstable, 0.1), unstable_plant);

  Eigen::MatrixXd defective(2, 2);
  defective << 0.5, 1.0, 0.0, 0.5;
  CHECK_THROWS_AS(completeness_bound(defective, 0.1), repeated_eigenvalues);
}

// the guarantee itself: a loop confined to the hull of its first k_bar
// iterations stays confined long after
TEST_CASE("depth bound is semantically complete on random loops") {
  std::uint64_t s = 77;
  int tested = 0;
  while (tested < 40) {
    const int n = 2 + (tested % 2);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = (splitmix(s) - 0.5) * 2.0;
    const auto eig = eigenvalues(a);
    double rho = 0.0;
    for (const auto& z : eig) rho = std::max(rho, std::abs(z));
    if (rho < 0.05) continue;
    a *= 0.95 / rho;  // spectral radius 0.95

    box init(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      init[static_cast<std::size_t>(i)] =
          interval(-0.5 - splitmix(s), 0.5 + splitmix(s));

    completeness_threshold ct;
    try {
      ct = completeness_bound(a, 0.1);
    } catch (const repeated_eigenvalues&) {
      continue;
    } catch (const unstable_plant&) {
      continue;  // QR and Jury may disagree within rounding of the rescale
    }
    if (ct.k_bar > 2000) continue;

    // hull of the vertex trajectories over the first k_bar iterations; the
    // per-coordinate extremes of a linear image of a box sit at vertices
    const auto corners = vertices(init);
    std::vector<Eigen::VectorXd> states = corners;
    Eigen::VectorXd mag = Eigen::VectorXd::Zero(n);
    for (const auto& v : states)
      mag = mag.cwiseMax(v.cwiseAbs());
    for (int k = 2; k <= ct.k_bar; ++k)
      for (auto& v : states) {
        v = a * v;
        mag = mag.cwiseMax(v.cwiseAbs());
      }

    const double ratio = mag.minCoeff() / mag.maxCoeff();
    completeness_threshold scaled;
    try {
      scaled = completeness_bound(a, 0.1, ratio);
    } catch (const repeated_eigenvalues&) {
      continue;
    }
    if (scaled.k_bar > 2000) continue;

    // rebuild the hull to the deeper bound, then run far beyond it
    states = corners;
    Eigen::VectorXd hull = Eigen::VectorXd::Zero(n);
    for (const auto& v : states) hull = hull.cwiseMax(v.cwiseAbs());
    for (int k = 2; k <= scaled.k_bar; ++k)
      for (auto& v : states) {
        v = a * v;
        hull = hull.cwiseMax(v.cwiseAbs());
      }
    for (int k = scaled.k_bar + 1; k <= 10 * scaled.k_bar; ++k)
      for (auto& v : states) {
        v = a * v;
        for (int i = 0; i < n; ++i)
          REQUIRE(std::abs(v[i]) <= hull[i] * (1.0 + 1e-9));
      }
    ++tested;
  }
}

TEST_CASE("certified power norm dominates the exact norm") {
  Eigen::MatrixXd d(2, 2);
  d << 0.5, 0.0, 0.0, 0.25;
  const double got = certified_power_norm(d, 3);
  CHECK(got >= 0.125);
  CHECK(got <= 0.125 + 1e-12);

  std::uint64_t s = 5;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = (splitmix(s) - 0.5);
    const int p = 1 + rep % 6;
    Eigen::MatrixXd pow = Eigen::MatrixXd::Identity(3, 3);
    for (int i = 0; i < p; ++i) pow = pow * a;
    const double exact = pow.cwiseAbs().rowwise().sum().maxCoeff();
    REQUIRE(certified_power_norm(a, p) >= exact * (1.0 - 1e-12));
  }
}

TEST_CASE("round-off steady-state set") {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.5;
  b << 1.0;
  const discrete_plant plant(a, b, 0.1);
  const controller ctrl = controller::from_doubles(
      (Eigen::VectorXd(1) << 0.25).finished(), fixed_format(8, 8));
  // (1 - 0.5 + 0.25)^-1 * 0.25 * delta = delta / 3
  const box set = fwl_convergence_set(plant, ctrl, 0.1);
  REQUIRE(set.size() == 1);
  CHECK(set[0].contains(0.1 / 3.0));
  CHECK(set[0].contains(-0.1 / 3.0));
  CHECK(set[0].hi < 0.04);

  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const discrete_plant marginal(one, b, 0.1);
  const controller zero = controller::from_doubles(
      Eigen::VectorXd::Zero(1), fixed_format(8, 8));
  CHECK_THROWS_AS(fwl_convergence_set(marginal, zero, 0.1), singular_matrix);
}
