#include "ctrlsynth/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace ctrlsynth {

noise_model build_noise_model(fixed_format fmt_c, fixed_format fmt_dac,
                              const controller& ctrl) {
  noise_model m;
  m.dim = ctrl.n();
  m.q1 = fmt_c.step();
  m.q2 = fmt_dac.fraction_bits < fmt_c.fraction_bits ? fmt_dac.step() : 0.0;
  m.q3 = ctrl.format().step() *
         (static_cast<double>(ctrl.n()) + ctrl.abs_gain_sum());
  double r = m.q1 / 2.0 + m.q2 / 2.0 + m.q3;
  m.n_set = interval(-r, r);
  return m;
}

namespace {

std::vector<fixed_value> sample_state(const Eigen::VectorXd& x,
                                      fixed_format fmt) {
  std::vector<fixed_value> out;
  out.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(quantize(x[i], fmt));
  return out;
}

}  // namespace

step_result noisy_step(const discrete_plant& plant, const controller& ctrl,
                       const Eigen::VectorXd& x, double nu1, double nu2,
                       const safety_spec& spec, fixed_format plant_fmt,
                       std::optional<fixed_format> dac_fmt) {
  const std::size_t n = plant.n();
  if (static_cast<std::size_t>(x.size()) != n || ctrl.n() != n ||
      plant.m() != 1 || spec.n() != n)
    throw dimension_mismatch("noisy_step: inconsistent dimensions");

  fixed_dot_result dot = dot_fixed(ctrl.k, sample_state(x, ctrl.format()));
  step_result r;
  r.u_unclamped = -dot.value.value() + nu1;
  r.u = std::clamp(r.u_unclamped, spec.input_bounds.lo, spec.input_bounds.hi);
  r.saturated = r.u != r.u_unclamped;

  fixed_value u_dac = quantize(r.u + nu2, dac_fmt.value_or(ctrl.format()));
  fixed_value u_p = quantize(u_dac.value(), plant_fmt);

  std::vector<fixed_value> xp = sample_state(x, plant_fmt);
  r.x_next.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    fixed_value acc = fp_mul(quantize(plant.A_d(ii, 0), plant_fmt), xp[0]);
    for (std::size_t j = 1; j < n; ++j)
      acc = fp_add(acc, fp_mul(quantize(plant.A_d(ii, static_cast<Eigen::Index>(j)),
                                        plant_fmt),
                               xp[j]));
    acc = fp_add(acc, fp_mul(quantize(plant.B_d(ii, 0), plant_fmt), u_p));
    r.x_next[ii] = acc.value();
  }
  return r;
}

namespace {

// platform-independent uniform draw in [-bound, bound]
double draw(std::uint64_t& state, double bound) {
  // splitmix64 step
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  double u01 = static_cast<double>(z >> 11) * 0x1.0p-53;
  return (2.0 * u01 - 1.0) * bound;
}

}  // namespace

trace simulate(const discrete_plant& plant, const controller& ctrl,
               const Eigen::VectorXd& x0, int steps, noise_policy policy,
               const safety_spec& spec, fixed_format plant_fmt,
               const noise_model& noise, std::uint64_t seed,
               std::optional<fixed_format> dac_fmt) {
  if (steps < 1) throw validation_error("simulate: steps must be >= 1");
  trace tr;
  tr.entries.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd x = x0;
  std::uint64_t rng = seed ^ 0x8af1d7a58cbb13d5ULL;
  const double b1 = noise.q1 / 2.0;
  const double b2 = noise.q2 / 2.0;

  for (int k = 0; k < steps; ++k) {
    step_result chosen;
    try {
      switch (policy) {
        case noise_policy::zero:
          chosen = noisy_step(plant, ctrl, x, 0.0, 0.0, spec, plant_fmt, dac_fmt);
          break;
        case noise_policy::sampled: {
          double nu1 = b1 > 0.0 ? draw(rng, b1) : 0.0;
          double nu2 = b2 > 0.0 ? draw(rng, b2) : 0.0;
          chosen = noisy_step(plant, ctrl, x, nu1, nu2, spec, plant_fmt, dac_fmt);
          break;
        }
        case noise_policy::worst_case_sign: {
          const std::array<double, 2> s1 = {b1, -b1};
          const std::array<double, 2> s2 = {b2, -b2};
          double best = -1.0;
          for (double nu1 : s1) {
            for (double nu2 : s2) {
              step_result cand =
                  noisy_step(plant, ctrl, x, nu1, nu2, spec, plant_fmt, dac_fmt);
              double norm = cand.x_next.lpNorm<Eigen::Infinity>();
              if (norm > best) {
                best = norm;
                chosen = cand;
              }
              if (b2 == 0.0) break;
            }
            if (b1 == 0.0) break;
          }
          break;
        }
      }
    } catch (const fixed_overflow& e) {
      throw fixed_overflow(std::string(e.what()) + " at step " +
                               std::to_string(k + 1),
                           e.value, e.direction);
    }
    tr.entries.push_back({k, x, chosen.u, chosen.saturated});
    x = chosen.x_next;
  }
  step_result last = noisy_step(plant, ctrl, x, 0.0, 0.0, spec, plant_fmt, dac_fmt);
  tr.entries.push_back({steps, x, last.u, last.saturated});
  return tr;
}

void write_csv(const trace& tr, std::ostream& out) {
  std::size_t n = tr.entries.empty()
                      ? 0
                      : static_cast<std::size_t>(tr.entries.front().x.size());
  out << "k";
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
  out << ",u\n";
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : tr.entries) {
    out << e.k;
    for (Eigen::Index i = 0; i < e.x.size(); ++i) out << ',' << e.x[i];
    out << ',' << e.u << '\n';
  }
}

}  // namespace ctrlsynth
