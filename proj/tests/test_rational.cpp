#include "ctrlsynth/rational.hpp"

#include <doctest.h>

#include <cstdint>
#include <limits>
#include <vector>

#include "ctrlsynth/errors.hpp"

using namespace ctrlsynth;

TEST_CASE("doubles convert exactly and round trip") {
  CHECK(to_rational(0.5) == rational(1, 2));
  CHECK(to_rational(-0.75) == rational(-3, 4));
  CHECK(to_rational(0.1) != rational(1, 10));  // 0.1 is not dyadic
  CHECK(to_double(to_rational(0.1)) == 0.1);
  CHECK(to_double(to_rational(1e-300)) == 1e-300);
  CHECK(to_double(to_rational(12345.6789)) == 12345.6789);
  CHECK_THROWS_AS(to_rational(std::numeric_limits<double>::infinity()),
                  non_finite);
  CHECK_THROWS_AS(to_rational(std::numeric_limits<double>::quiet_NaN()),
                  non_finite);
}

TEST_CASE("matrix algebra is exact") {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, -0.25, 1.0, 0.125;
  const rat_matrix ra = rat_matrix::from(a);
  CHECK(ra(0, 0) == rational(1, 2));
  CHECK(ra(0, 1) == rational(-1, 4));
  CHECK(ra.trace() == rational(5, 8));
  CHECK(ra.to_double() == a);

  const rat_matrix id = rat_matrix::identity(2);
  const rat_matrix p = ra * id;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(p(i, j) == ra(i, j));

  const rat_matrix sum = ra + ra;
  CHECK(sum(1, 0) == rational(2));
  const rat_matrix diff = ra - ra;
  CHECK(diff(0, 0) == rational(0));
  const rat_matrix scaled = rational(3) * ra;
  CHECK(scaled(0, 0) == rational(3, 2));

  const std::vector<rational> x{rational(1), rational(2)};
  const std::vector<rational> y = ra * x;
  CHECK(y[0] == rational(1, 2) - rational(1, 2));
  CHECK(y[1] == rational(1) + rational(1, 4));

  CHECK_THROWS_AS(rat_matrix::identity(2) * rat_matrix(3, 3),
                  dimension_mismatch);
}

// associativity and distributivity hold bit-exactly, unlike in floating point
TEST_CASE("no rounding under iteration") {
  Eigen::MatrixXd a(2, 2);
  a << 0.3, -0.7, 0.9, 0.1;  // binary64 images of decimal literals
  const rat_matrix m = rat_matrix::from(a);
  rat_matrix p = rat_matrix::identity(2);
  for (int i = 0; i < 12; ++i) p = p * m;
  rat_matrix q = rat_matrix::identity(2);
  for (int i = 0; i < 6; ++i) q = q * (m * m);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(p(i, j) == q(i, j));
}

// the trajectory from a convex combination of two starts equals the same
// combination of the two trajectories, exactly
TEST_CASE("linear iteration commutes with convex combination") {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.25, -0.125, 0.75;
  const rat_matrix m = rat_matrix::from(a);
  const std::vector<rational> v0{rational(-1), rational(1)};
  const std::vector<rational> v1{rational(1), rational(1)};
  const rational lam(3, 7);

  std::vector<rational> mix{lam * v0[0] + (1 - lam) * v1[0],
                            lam * v0[1] + (1 - lam) * v1[1]};
  std::vector<rational> t0 = v0, t1 = v1;
  for (int k = 0; k < 10; ++k) {
    t0 = m * t0;
    t1 = m * t1;
    mix = m * mix;
    for (std::size_t i = 0; i < 2; ++i)
      REQUIRE(mix[i] == lam * t0[i] + (1 - lam) * t1[i]);
  }
}
