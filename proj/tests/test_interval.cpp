#include "ctrlsynth/interval.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "ctrlsynth/errors.hpp"
#include "ctrlsynth/rational.hpp"

using namespace ctrlsynth;

namespace {

// deterministic full-range doubles for property sweeps
double next_double(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
  // span several binades around one
  return (u - 0.5) * 64.0;
}

}  // namespace

TEST_CASE("directed kernels bracket the exact result") {
  std::uint64_t s = 7;
  for (int i = 0; i < 20000; ++i) {
    const double a = next_double(s);
    const double b = next_double(s);
    const long double exact_sum = static_cast<long double>(a) + b;
    REQUIRE(static_cast<long double>(add_down(a, b)) <= exact_sum);
    REQUIRE(static_cast<long double>(add_up(a, b)) >= exact_sum);
    // each endpoint sits within one ulp of the round-to-nearest sum
    const double inf = std::numeric_limits<double>::infinity();
    REQUIRE(add_up(a, b) <=
            std::nextafter(std::nextafter(add_down(a, b), inf), inf));

    const long double exact_diff = static_cast<long double>(a) - b;
    REQUIRE(static_cast<long double>(sub_down(a, b)) <= exact_diff);
    REQUIRE(static_cast<long double>(sub_up(a, b)) >= exact_diff);

    const long double exact_prod = static_cast<long double>(a) * b;
    REQUIRE(static_cast<long double>(mul_down(a, b)) <= exact_prod);
    REQUIRE(static_cast<long double>(mul_up(a, b)) >= exact_prod);

    if (b != 0.0) {
      const long double exact_quot = static_cast<long double>(a) / b;
      REQUIRE(static_cast<long double>(div_down(a, b)) <= exact_quot);
      REQUIRE(static_cast<long double>(div_up(a, b)) >= exact_quot);
    }
  }
}

TEST_CASE("exact operations keep their endpoints bit for bit") {
  CHECK(add_up(1.0, 0.0) == 1.0);
  CHECK(add_down(1.0, 0.0) == 1.0);
  CHECK(add_up(0.5, 0.25) == 0.75);
  CHECK(mul_up(0.25, 0.5) == 0.125);
  CHECK(mul_down(0.25, 0.5) == 0.125);
  CHECK(div_up(1.0, 4.0) == 0.25);
  CHECK(div_down(1.0, 4.0) == 0.25);
  CHECK(sub_up(1.5, 0.5) == 1.0);
}

TEST_CASE("inexact operations widen by exactly one ulp") {
  const double tiny = 1e-300;
  CHECK(add_down(1.0, tiny) == 1.0);
  CHECK(add_up(1.0, tiny) ==
        std::nextafter(1.0, std::numeric_limits<double>::infinity()));
  CHECK(add_up(1.0, -tiny) == 1.0);
  CHECK(add_down(1.0, -tiny) ==
        std::nextafter(1.0, -std::numeric_limits<double>::infinity()));
  CHECK(div_down(1.0, 3.0) < div_up(1.0, 3.0));
  CHECK(div_up(1.0, 3.0) ==
        std::nextafter(div_down(1.0, 3.0),
                       std::numeric_limits<double>::infinity()));
}

TEST_CASE("kernels refuse non-finite results") {
  CHECK_THROWS_AS(add_up(1e308, 1e308), non_finite);
  CHECK_THROWS_AS(mul_up(1e300, 1e300), non_finite);
  CHECK_THROWS_AS(div_up(1.0, 0.0), non_finite);
}

TEST_CASE("interval construction and scalar queries") {
  CHECK_THROWS_AS(interval(2.0, 1.0), error);
  const interval a(-2.0, 1.0);
  CHECK(a.mid() == -0.5);
  CHECK(a.rad() == 1.5);
  CHECK(a.mag() == 2.0);
  CHECK(a.mig() == 0.0);
  CHECK(a.contains_zero());
  CHECK(a.contains(-2.0));
  CHECK(!a.contains(1.5));
  const interval b(1.0, 3.0);
  CHECK(b.mig() == 1.0);
  CHECK(!b.contains_zero());
  const interval c = interval::centered(1.0, 0.25);
  CHECK(c.contains(0.75));
  CHECK(c.contains(1.25));
}

TEST_CASE("interval arithmetic sign cases") {
  auto eq = [](const interval& x, double lo, double hi) {
    return x.lo == lo && x.hi == hi;
  };
  CHECK(eq(interval(1, 2) * interval(3, 4), 3, 8));
  CHECK(eq(interval(-2, -1) * interval(3, 4), -8, -3));
  CHECK(eq(interval(-1, 2) * interval(-3, 4), -6, 8));
  CHECK(eq(interval(1, 2) + interval(-1, 1), 0, 3));
  CHECK(eq(interval(1, 2) - interval(1, 2), -1, 1));
  CHECK(eq(-interval(1, 2), -2, -1));
  CHECK(eq(abs(interval(-3, 1)), 0, 3));
  CHECK(eq(abs(interval(-3, -1)), 1, 3));
  CHECK(eq(hull(interval(0, 1), interval(2, 3)), 0, 3));
  CHECK(eq(intersect(interval(0, 2), interval(1, 3)), 1, 2));
  CHECK_THROWS_AS(intersect(interval(0, 1), interval(2, 3)), error);
  CHECK_THROWS_AS(interval(1, 2) / interval(-1, 1), error);
  CHECK(eq(interval(4, 8) / interval(2, 4), 1, 4));
}

TEST_CASE("interval product contains the exact rational product") {
  std::uint64_t s = 99;
  for (int i = 0; i < 5000; ++i) {
    const double alo = next_double(s);
    const double ahi = alo + std::abs(next_double(s));
    const double blo = next_double(s);
    const double bhi = blo + std::abs(next_double(s));
    const interval p = interval(alo, ahi) * interval(blo, bhi);
    // endpoint products computed exactly must fall inside
    const rational plo = to_rational(p.lo), phi = to_rational(p.hi);
    for (const double x : {alo, ahi}) {
      for (const double y : {blo, bhi}) {
        const rational e = to_rational(x) * to_rational(y);
        REQUIRE(plo <= e);
        REQUIRE(e <= phi);
      }
    }
  }
}

TEST_CASE("box queries and vertex order") {
  box b(2);
  b[0] = interval(-1.0, 1.0);
  b[1] = interval(-2.0, 2.0);
  CHECK(b.radius() == 2.0);
  Eigen::VectorXd x(2);
  x << 0.5, -1.5;
  CHECK(b.contains(x));
  x << 0.5, -2.5;
  CHECK(!b.contains(x));

  const auto vs = vertices(b);
  REQUIRE(vs.size() == 4);
  // first vertex all lower bounds, last all upper, last coordinate fastest
  CHECK(vs[0] == (Eigen::VectorXd(2) << -1, -2).finished());
  CHECK(vs[1] == (Eigen::VectorXd(2) << -1, 2).finished());
  CHECK(vs[2] == (Eigen::VectorXd(2) << 1, -2).finished());
  CHECK(vs[3] == (Eigen::VectorXd(2) << 1, 2).finished());

  box c(3);
  c[0] = c[1] = c[2] = interval(0.0, 1.0);
  CHECK(vertices(c).size() == 8);

  const box sum = box_sum(b, c);
  CHECK(sum[0].lo == -1.0);
  CHECK(sum[0].hi == 2.0);
  CHECK(sum[1].lo == -2.0);
  CHECK(sum[1].hi == 3.0);

  const box h = hull(b, c);
  CHECK(h[0].lo == -1.0);
  CHECK(h[0].hi == 1.0);
  CHECK(h[1].hi == 2.0);

  box inner(2);
  inner[0] = interval(-0.5, 0.5);
  inner[1] = interval(0.0, 1.0);
  CHECK(b.contains(inner));
  CHECK(!inner.contains(b));
}

TEST_CASE("interval matrix constructors and norm") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, -2.0, 0.5, 0.25;
  const interval_matrix im = interval_matrix::exact(m);
  CHECK(im(0, 1).lo == -2.0);
  CHECK(im(0, 1).hi == -2.0);
  CHECK(im.inf_norm_upper() == 3.0);
  CHECK(im.midpoint() == m);
  CHECK(im.radius().isZero());

  const interval_matrix id = interval_matrix::identity(3);
  CHECK(id(0, 0).lo == 1.0);
  CHECK(id(2, 1).hi == 0.0);

  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(2, 2, 0.125);
  const interval_matrix c = interval_matrix::centered(m, r);
  CHECK(c(0, 0).contains(1.125));
  CHECK(c(0, 0).contains(0.875));
  CHECK(c.inf_norm_upper() == doctest::Approx(2.125 + 1.125).epsilon(1e-12));
}

TEST_CASE("interval matrix product contains the exact product") {
  std::uint64_t s = 1234;
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::MatrixXd a(3, 3), b(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        a(i, j) = next_double(s);
        b(i, j) = next_double(s);
      }
    const interval_matrix p =
        interval_matrix::exact(a) * interval_matrix::exact(b);
    const rat_matrix exact = rat_matrix::from(a) * rat_matrix::from(b);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        REQUIRE(to_rational(p(i, j).lo) <= exact(i, j));
        REQUIRE(exact(i, j) <= to_rational(p(i, j).hi));
      }
  }
}

TEST_CASE("matrix box image contains every vertex image") {
  std::uint64_t s = 555;
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::MatrixXd a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = next_double(s);
    box x(2);
    x[0] = interval(-0.5, 1.0);
    x[1] = interval(0.25, 2.0);
    const box y = interval_matrix::exact(a) * x;
    for (const auto& v : vertices(x)) {
      const Eigen::VectorXd img = a * v;
      REQUIRE(y.contains(img));
    }
  }
}

TEST_CASE("box step is the image plus the noise box") {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.0, 0.0, -0.5;
  box x(2);
  x[0] = interval(-1.0, 1.0);
  x[1] = interval(-1.0, 1.0);
  box w(2);
  w[0] = interval(-0.125, 0.125);
  w[1] = interval(-0.125, 0.125);
  const box y = box_step(interval_matrix::exact(a), x, w);
  CHECK(y[0].lo == -0.625);
  CHECK(y[0].hi == 0.625);
  CHECK(y[1].lo == -0.625);
  CHECK(y[1].hi == 0.625);
}

TEST_CASE("interval solve encloses the true solution") {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.0, 0.0, 4.0;
  const interval_matrix x =
      solve(interval_matrix::exact(a), interval_matrix::identity(2));
  CHECK(x(0, 0).contains(0.5));
  CHECK(x(1, 1).contains(0.25));
  CHECK(x(0, 1).contains(0.0));

  std::uint64_t s = 31;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3) * 4.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) += next_double(s) / 32.0;
    Eigen::MatrixXd rhs(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rhs(i, j) = next_double(s);
    const interval_matrix x2 =
        solve(interval_matrix::exact(m), interval_matrix::exact(rhs));
    // the enclosure composed with m must cover the right-hand side
    const interval_matrix back = interval_matrix::exact(m) * x2;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        REQUIRE(back(i, j).contains(rhs(i, j)));
  }

  Eigen::MatrixXd sing(2, 2);
  sing << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(
      solve(interval_matrix::exact(sing), interval_matrix::identity(2)),
      singular_matrix);
}

TEST_CASE("inverse composes to an identity enclosure") {
  Eigen::MatrixXd a(2, 2);
  a << 3.0, 1.0, -1.0, 2.0;
  const interval_matrix inv = inverse(interval_matrix::exact(a));
  const interval_matrix prod = interval_matrix::exact(a) * inv;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      REQUIRE(prod(i, j).contains(i == j ? 1.0 : 0.0));
}
