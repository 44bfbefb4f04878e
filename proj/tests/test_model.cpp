#include "ctrlsynth/model.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "ctrlsynth/errors.hpp"

using namespace ctrlsynth;

namespace {

double splitmix(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// independent oracle: truncated Taylor series for the augmented exponential
// [[A, B], [0, 0]] * t in long double; adequate for ||A t|| < 1
void taylor_zoh(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t,
                Eigen::MatrixXd& ad, Eigen::MatrixXd& bd) {
  const int n = static_cast<int>(a.rows());
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> aug =
      Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>::Zero(n + 1,
                                                                       n + 1);
  aug.topLeftCorner(n, n) = (a * t).cast<long double>();
  aug.topRightCorner(n, 1) = (b * t).cast<long double>();
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> sum =
      Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>::Identity(
          n + 1, n + 1);
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> term = sum;
  for (int k = 1; k <= 40; ++k) {
    term = (term * aug) / static_cast<long double>(k);
    sum += term;
  }
  ad = sum.topLeftCorner(n, n).cast<double>();
  bd = sum.topRightCorner(n, 1).cast<double>();
}

}  // namespace

TEST_CASE("scalar discretization against closed form") {
  continuous_plant p((Eigen::MatrixXd(1, 1) << -1.0).finished(),
                     (Eigen::MatrixXd(1, 1) << 1.0).finished());
  const discrete_plant d = discretize(p, 0.5);
  // e^{-1/2} and 1 - e^{-1/2}, correctly rounded
  CHECK(std::abs(d.A_d(0, 0) - 0.6065306597126334236) <=
        d.a_rad(0, 0) + 1e-15);
  CHECK(std::abs(d.B_d(0, 0) - 0.3934693402873665764) <=
        d.b_rad(0, 0) + 1e-15);
  CHECK(d.a_rad(0, 0) < 1e-11);
  CHECK(d.b_rad(0, 0) < 1e-11);
  CHECK(d.T_s == 0.5);
}

TEST_CASE("rotation block discretization against high-precision values") {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << -0.5, 2.0, -2.0, -0.5;
  b << 0.0, 1.0;
  const discrete_plant d = discretize(continuous_plant(a, b), 0.1);
  // e^{-0.05} (cos 0.2, sin 0.2) block, 40-digit reference
  const double c = 0.93226816681230850559;
  const double s = 0.18898011319812805913;
  CHECK(std::abs(d.A_d(0, 0) - c) <= d.a_rad(0, 0) + 1e-15);
  CHECK(std::abs(d.A_d(0, 1) - s) <= d.a_rad(0, 1) + 1e-15);
  CHECK(std::abs(d.A_d(1, 0) + s) <= d.a_rad(1, 0) + 1e-15);
  CHECK(std::abs(d.A_d(1, 1) - c) <= d.a_rad(1, 1) + 1e-15);
  CHECK(std::abs(d.B_d(0, 0) - 0.0096408493591338727673) <=
        d.b_rad(0, 0) + 1e-15);
  CHECK(std::abs(d.B_d(1, 0) - 0.096900268938847497758) <=
        d.b_rad(1, 0) + 1e-15);
}

TEST_CASE("discretization tracks a Taylor oracle on random plants") {
  std::uint64_t seed = 2024;
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + (rep % 2);
    Eigen::MatrixXd a(n, n), b(n, 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = splitmix(seed) * 2.0;
      b(i, 0) = splitmix(seed);
    }
    const double t = 0.05 + 0.1 * std::abs(splitmix(seed));
    const discrete_plant d = discretize(continuous_plant(a, b), t);
    Eigen::MatrixXd ad, bd;
    taylor_zoh(a, b, t, ad, bd);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        REQUIRE(std::abs(d.A_d(i, j) - ad(i, j)) <=
                d.a_rad(i, j) + 1e-13 * std::max(1.0, std::abs(ad(i, j))));
      REQUIRE(std::abs(d.B_d(i, 0) - bd(i, 0)) <=
              d.b_rad(i, 0) + 1e-13 * std::max(1.0, std::abs(bd(i, 0))));
    }
  }
}

TEST_CASE("directly discrete plants carry zero radii") {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 0.5, 0.1, 0.0, 0.25;
  b << 1.0, 0.5;
  const discrete_plant d(a, b, 0.1);
  CHECK(d.a_rad.isZero());
  CHECK(d.b_rad.isZero());
  const interval_matrix ai = d.a_interval();
  CHECK(ai(0, 0).lo == 0.5);
  CHECK(ai(0, 0).hi == 0.5);
  const interval_matrix bi = d.b_interval();
  CHECK(bi(1, 0).lo == 0.5);
}

TEST_CASE("controller representability contract") {
  const fixed_format fmt(8, 8);
  Eigen::VectorXd good(2);
  good << 0.25, -1.5;
  const controller c = controller::from_doubles(good, fmt);
  CHECK(c.n() == 2);
  CHECK(c.gains() == good);
  CHECK(c.abs_gain_sum() == 1.75);
  CHECK(c.format() == fmt);

  Eigen::VectorXd bad(2);
  bad << 0.001, 0.0;  // below one step of <8,8>
  CHECK_THROWS_AS(controller::from_doubles(bad, fmt), validation_error);

  CHECK_THROWS_AS(controller(std::vector<fixed_value>{}), validation_error);
  CHECK_THROWS_AS(
      controller(std::vector<fixed_value>{fixed_value(1, fixed_format(8, 8)),
                                          fixed_value(1, fixed_format(4, 4))}),
      validation_error);
}

TEST_CASE("closed loop composes A - B K in every representation") {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 1.0, 0.5, -0.25, 0.75;
  b << 1.0, 2.0;
  const discrete_plant d(a, b, 0.1);
  Eigen::VectorXd g(2);
  g << 0.5, -0.25;
  const controller c = controller::from_doubles(g, fixed_format(8, 8));

  Eigen::MatrixXd want(2, 2);
  want << 1.0 - 0.5, 0.5 + 0.25, -0.25 - 1.0, 0.75 + 0.5;
  CHECK(closed_loop_matrix(d, c) == want);

  const rat_matrix r = closed_loop_rational(d, c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      REQUIRE(r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
              to_rational(want(i, j)));

  const interval_matrix im = closed_loop_interval(d, c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      REQUIRE(im(static_cast<std::size_t>(i), static_cast<std::size_t>(j))
                  .contains(want(i, j)));
      REQUIRE(im(static_cast<std::size_t>(i), static_cast<std::size_t>(j))
                  .rad() <= 1e-15);
    }
}

// with a plant word the enclosure must cover both the exact entry and its
// word representation
TEST_CASE("closed loop interval covers the plant word image") {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.3;  // inexact at <13,3>
  b << 1.0;
  const discrete_plant d(a, b, 0.1);
  const controller c =
      controller::from_doubles(Eigen::VectorXd::Zero(1), fixed_format(8, 8));
  const fixed_format coarse(13, 3);
  const interval_matrix im = closed_loop_interval(d, c, coarse);
  CHECK(im(0, 0).contains(0.3));
  CHECK(im(0, 0).contains(quantize(0.3, coarse).value()));
}

TEST_CASE("safety spec validation") {
  box state(2);
  state[0] = state[1] = interval(-1.0, 1.0);
  box init(2);
  init[0] = init[1] = interval(-0.5, 0.5);
  CHECK_NOTHROW(safety_spec(state, interval(-1.0, 1.0), init));

  box outside(2);
  outside[0] = interval(-2.0, 0.5);
  outside[1] = interval(-0.5, 0.5);
  CHECK_THROWS_AS(safety_spec(state, interval(-1.0, 1.0), outside),
                  validation_error);
  CHECK_THROWS_AS(safety_spec(state, interval(1.0, 1.0), init),
                  validation_error);
  CHECK_THROWS_AS(safety_spec(box(0), interval(-1.0, 1.0), box(0)),
                  validation_error);
}
