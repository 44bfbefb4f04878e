#include "ctrlsynth/fixedpoint.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ctrlsynth/errors.hpp"

using namespace ctrlsynth;

namespace {

// every representable value of a format, by raw word
std::vector<std::int64_t> all_raws(fixed_format fmt) {
  std::vector<std::int64_t> out;
  for (std::int64_t r = -fmt.max_raw(); r <= fmt.max_raw(); ++r)
    out.push_back(r);
  return out;
}

}  // namespace

TEST_CASE("format geometry") {
  const fixed_format f44(4, 4);
  CHECK(f44.step() == 0.0625);
  CHECK(f44.max_magnitude() == 8.9375);
  CHECK(f44.max_raw() == 143);
  CHECK(f44.str() == "<4,4>");

  const fixed_format f88(8, 8);
  CHECK(f88.step() == 1.0 / 256.0);
  CHECK(f88.max_magnitude() == 129.0 - 1.0 / 256.0);

  CHECK_THROWS_AS(fixed_format(0, 4), error);
  CHECK_THROWS_AS(fixed_format(4, -1), error);
  // raw words are held in 64 bits with headroom for the double-wide product
  CHECK_THROWS_AS(fixed_format(40, 30), error);
}

TEST_CASE("quantize truncates toward zero over the whole lattice") {
  const fixed_format fmt(4, 4);
  const double cm = fmt.step();
  for (const std::int64_t r : all_raws(fmt)) {
    const double base = static_cast<double>(r) * cm;
    // dither below one step keeps the truncation on the same raw word for
    // nonnegative values; negative values truncate up toward zero
    for (int d = 0; d < 16; ++d) {
      const double dither = static_cast<double>(d) / 16.0 * cm;
      const double x = r >= 0 ? base + dither : base - dither;
      if (std::abs(x) > fmt.max_magnitude()) continue;
      double delta = 0.0;
      const fixed_value v = quantize(x, fmt, delta);
      REQUIRE(v.raw == r);
      REQUIRE(delta == x - v.value());
      REQUIRE(std::abs(delta) < cm);
      if (delta != 0.0) REQUIRE(std::signbit(delta) == std::signbit(x));
    }
  }
  // both approaches to zero truncate onto the zero word
  CHECK(quantize(cm * 0.999, fmt).raw == 0);
  CHECK(quantize(-cm * 0.999, fmt).raw == 0);
}

TEST_CASE("quantize range edges and rejects") {
  const fixed_format fmt(4, 4);
  CHECK(quantize(fmt.max_magnitude(), fmt).raw == fmt.max_raw());
  CHECK(quantize(-fmt.max_magnitude(), fmt).raw == -fmt.max_raw());
  // anything that still truncates onto the last raw word is representable
  CHECK(quantize(fmt.max_magnitude() + 0.5 * fmt.step(), fmt).raw ==
        fmt.max_raw());
  CHECK_THROWS_AS(quantize(fmt.max_magnitude() + fmt.step(), fmt),
                  fixed_overflow);
  CHECK_THROWS_AS(quantize(-fmt.max_magnitude() - fmt.step(), fmt),
                  fixed_overflow);
  try {
    quantize(100.0, fmt);
    FAIL("expected overflow");
  } catch (const fixed_overflow& e) {
    CHECK(e.direction == 1);
    CHECK(e.value == 100.0);
  }
  try {
    quantize(-100.0, fmt);
    FAIL("expected overflow");
  } catch (const fixed_overflow& e) {
    CHECK(e.direction == -1);
  }
  CHECK_THROWS_AS(quantize(std::numeric_limits<double>::quiet_NaN(), fmt),
                  non_finite);
  CHECK_THROWS_AS(quantize(std::numeric_limits<double>::infinity(), fmt),
                  non_finite);
}

TEST_CASE("addition is exact on raw words, exhaustively") {
  for (const fixed_format fmt : {fixed_format(4, 4), fixed_format(3, 5)}) {
    const auto raws = all_raws(fmt);
    long long checked = 0;
    for (const std::int64_t ra : raws) {
      for (const std::int64_t rb : raws) {
        if (std::abs(ra + rb) > fmt.max_raw()) continue;
        const fixed_value a(ra, fmt), b(rb, fmt);
        const fixed_value s = fp_add(a, b);
        REQUIRE(s.raw == ra + rb);
        REQUIRE(s.value() == a.value() + b.value());
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
  const fixed_format fmt(4, 4);
  CHECK_THROWS_AS(
      fp_add(fixed_value(fmt.max_raw(), fmt), fixed_value(1, fmt)),
      fixed_overflow);
  CHECK_THROWS_AS(
      fp_add(fixed_value(-fmt.max_raw(), fmt), fixed_value(-1, fmt)),
      fixed_overflow);
}

TEST_CASE("multiplication discards less than one step, exhaustively") {
  for (const fixed_format fmt : {fixed_format(4, 4), fixed_format(3, 5)}) {
    const double cm = fmt.step();
    const auto raws = all_raws(fmt);
    for (const std::int64_t ra : raws) {
      for (const std::int64_t rb : raws) {
        const fixed_value a(ra, fmt), b(rb, fmt);
        const double exact = a.value() * b.value();
        if (std::abs(exact) > fmt.max_magnitude()) continue;
        const fixed_value p = fp_mul(a, b);
        const double discarded = exact - p.value();
        REQUIRE(std::abs(discarded) < cm);
        // truncation of the double-wide product goes toward zero
        if (discarded != 0.0)
          REQUIRE(std::signbit(discarded) == std::signbit(exact));
      }
    }
  }
  const fixed_format fmt(4, 4);
  CHECK_THROWS_AS(fp_mul(fixed_value(128, fmt), fixed_value(128, fmt)),
                  fixed_overflow);
}

// worst-case error of a product of truncated reals c1, c2 against the true
// product: |delta1 F(c2)| + |delta2 F(c1)| + cm, with delta the truncation
// each operand suffered on representation
TEST_CASE("real-operand product error bound holds on a dithered lattice") {
  const fixed_format fmt(4, 4);
  const double cm = fmt.step();
  const double lim = fmt.max_magnitude();
  long long checked = 0;
  // stride cm/16 covers every raw word with sixteen dither positions
  const double stride = cm / 16.0;
  const long long span = static_cast<long long>(lim / stride);
  for (long long i = -span; i <= span; i += 23) {
    const double c1 = static_cast<double>(i) * stride;
    const fixed_value f1 = quantize(c1, fmt);
    const double d1 = c1 - f1.value();
    for (long long j = -span; j <= span; ++j) {
      const double c2 = static_cast<double>(j) * stride;
      const fixed_value f2 = quantize(c2, fmt);
      if (std::abs(f1.value() * f2.value()) > lim) continue;
      const double d2 = c2 - f2.value();
      const double got = fp_mul(f1, f2).value();
      const double err = std::abs(c1 * c2 - got);
      const double bound =
          std::abs(d1 * f2.value()) + std::abs(d2 * f1.value()) + cm;
      REQUIRE(err <= bound);
      ++checked;
    }
  }
  CHECK(checked > 100000);
}

TEST_CASE("division error bound formula") {
  // |(d2 c1 - d1 c2) / (d2^2 - d2 c2)|
  CHECK(fp_div_error_bound(1.0, 2.0, 0.0, 0.0) == 0.0);
  CHECK(fp_div_error_bound(1.0, 2.0, 0.5, 0.0) ==
        std::numeric_limits<double>::infinity());
  const double d1 = 0.0625, d2 = 0.03125;
  const double got = fp_div_error_bound(3.0, 2.0, d1, d2);
  const double want = std::abs((d2 * 3.0 - d1 * 2.0) / (d2 * d2 - d2 * 2.0));
  CHECK(got == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("dot product tracks its truncation budget") {
  const fixed_format fmt(4, 4);
  const double cm = fmt.step();
  // gains small enough that no intermediate sum can leave the format
  std::vector<std::int64_t> gain_raws;
  for (std::int64_t r = -16; r <= 16; ++r) gain_raws.push_back(r);
  std::vector<std::int64_t> state_raws;
  for (std::int64_t r = -140; r <= 140; r += 4) state_raws.push_back(r);
  state_raws.push_back(143);
  state_raws.push_back(-143);

  std::vector<fixed_value> k{fixed_value(0, fmt), fixed_value(0, fmt)};
  std::vector<fixed_value> x = k;
  for (const std::int64_t k1 : gain_raws) {
    for (const std::int64_t k2 : gain_raws) {
      k[0] = fixed_value(k1, fmt);
      k[1] = fixed_value(k2, fmt);
      for (const std::int64_t x1 : state_raws) {
        for (const std::int64_t x2 : state_raws) {
          x[0] = fixed_value(x1, fmt);
          x[1] = fixed_value(x2, fmt);
          const double exact = k[0].value() * x[0].value() +
                               k[1].value() * x[1].value();
          if (std::abs(exact) > fmt.max_magnitude() - 2.0 * cm) continue;
          const fixed_dot_result r = dot_fixed(k, x);
          REQUIRE(r.error_bound == 2.0 * cm);
          REQUIRE(std::abs(exact - r.value.value()) < 2.0 * cm);
        }
      }
    }
  }
}

// the controller round-off budget cm (n + sum |K_i|) covers the computed
// input's deviation from the ideal -K x on real states
TEST_CASE("controller input deviation stays inside the round-off budget") {
  const fixed_format fmt(4, 4);
  const double cm = fmt.step();
  const std::vector<std::int64_t> gain_raws = {-32, -17, -16, -1, 0,
                                               1,   3,   16,  17, 32};
  std::vector<fixed_value> k{fixed_value(0, fmt), fixed_value(0, fmt)};
  std::vector<fixed_value> x = k;
  for (const std::int64_t k1 : gain_raws) {
    for (const std::int64_t k2 : gain_raws) {
      k[0] = fixed_value(k1, fmt);
      k[1] = fixed_value(k2, fmt);
      const double q3 =
          cm * (2.0 + std::abs(k[0].value()) + std::abs(k[1].value()));
      for (double x1 = -2.0; x1 <= 2.0; x1 += 0.013) {
        for (double x2 = -2.0; x2 <= 2.0; x2 += 0.017) {
          x[0] = quantize(x1, fmt);
          x[1] = quantize(x2, fmt);
          const double ideal = -(k[0].value() * x1 + k[1].value() * x2);
          const double got = -dot_fixed(k, x).value.value();
          REQUIRE(std::abs(ideal - got) <= q3);
        }
      }
    }
  }
}
