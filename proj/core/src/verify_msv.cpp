#include "ctrlsynth/verify_msv.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "ctrlsynth/noise.hpp"
#include "ctrlsynth/synth.hpp"

namespace ctrlsynth {

namespace {

// mirrors the adversary in simulate(): per step, the sign combination
// maximizing the successor's infinity norm, first maximum kept
step_result adversary_step(const discrete_plant& plant, const controller& ctrl,
                           const Eigen::VectorXd& x, const safety_spec& spec,
                           fixed_format plant_fmt,
                           std::optional<fixed_format> dac_fmt, double b1,
                           double b2) {
  const std::array<double, 2> s1 = {b1, -b1};
  const std::array<double, 2> s2 = {b2, -b2};
  step_result chosen;
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
  return chosen;
}

}  // namespace

std::optional<safety_counterexample> verify_safety(
    const discrete_plant& plant, const controller& ctrl,
    const safety_spec& spec, int k, fixed_format plant_fmt,
    std::optional<fixed_format> dac_fmt) {
  if (k < 1) throw validation_error("unfolding depth must be >= 1");
  noise_model nm = build_noise_model(
      ctrl.format(), dac_fmt.value_or(ctrl.format()), ctrl);
  const double b1 = nm.q1 / 2.0;
  const double b2 = nm.q2 / 2.0;

  for (const Eigen::VectorXd& v : vertices(spec.init_box)) {
    Eigen::VectorXd x = v;
    for (int s = 0; s < k; ++s) {
      step_result chosen;
      try {
        chosen = adversary_step(plant, ctrl, x, spec, plant_fmt, dac_fmt, b1,
                                b2);
      } catch (const fixed_overflow&) {
        safety_counterexample c;
        c.x0 = v;
        c.violation_iteration = s + 2;
        c.why = safety_counterexample::cause::overflow;
        return c;
      }
      if (chosen.saturated) {
        safety_counterexample c;
        c.x0 = v;
        c.violation_iteration = s + 1;
        c.why = safety_counterexample::cause::input_bounds;
        return c;
      }
      x = chosen.x_next;
      for (std::size_t i = 0; i < spec.n(); ++i) {
        double xi = x[static_cast<Eigen::Index>(i)];
        if (xi < spec.state_box[i].lo || xi > spec.state_box[i].hi) {
          safety_counterexample c;
          c.x0 = v;
          c.violation_iteration = s + 2;
          c.why = safety_counterexample::cause::state_bounds;
          c.coordinate = i;
          return c;
        }
      }
    }
  }
  return std::nullopt;
}

precision_result verify_precision(const discrete_plant& plant,
                                  const controller& ctrl,
                                  const safety_spec& spec, int k,
                                  fixed_format plant_fmt,
                                  std::optional<fixed_format> dac_fmt) {
  if (k < 1) throw validation_error("unfolding depth must be >= 1");
  const std::size_t n = plant.n();
  const fixed_format dac = dac_fmt.value_or(ctrl.format());
  const double q1 = ctrl.format().step();  // ADC quantum
  const double c_m_c = ctrl.format().step();
  const double c_m_p = plant_fmt.step();
  const double q2 =
      dac.fraction_bits < ctrl.format().fraction_bits ? dac.step() : 0.0;
  const double u_requant =
      plant_fmt.fraction_bits < dac.fraction_bits ? c_m_p : 0.0;

  // controller-output error: ADC sampling through the gains plus the
  // left-to-right product truncations
  const double ru_ctrl =
      ctrl.abs_gain_sum() * q1 + static_cast<double>(n) * c_m_c;
  // applied-input error adds DAC and plant requantization
  const double ru = ru_ctrl + q2 + u_requant;

  // the replay propagates the near-exact closed loop; representation at the
  // plant word is folded into the per-step disturbance instead of the matrix
  // because interval powers compound entry radii through |A_cl| and wrap
  const interval_matrix m = closed_loop_interval(plant, ctrl);
  const interval_matrix ai = plant.a_interval();
  const interval_matrix bi = plant.b_interval();

  double safe_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) safe_abs += spec.state_box[i].mag();
  const double u_abs = spec.input_bounds.mag() + ru;

  Eigen::VectorXd w_rad(static_cast<Eigen::Index>(n));
  try {
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Index ii = static_cast<Eigen::Index>(i);
      // exact representation offsets of the numbers the plant word holds,
      // widened by the certified discretization radii
      double rep_a = 0.0;
      double row_a = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const Eigen::Index jj = static_cast<Eigen::Index>(j);
        double q = quantize(plant.A_d(ii, jj), plant_fmt).value();
        rep_a += (std::abs(q - plant.A_d(ii, jj)) + ai(i, j).rad()) *
                 spec.state_box[j].mag();
        row_a += ai(i, j).mag();
      }
      double qb = quantize(plant.B_d(ii, 0), plant_fmt).value();
      double rep_b =
          (std::abs(qb - plant.B_d(ii, 0)) + bi(i, 0).rad()) * u_abs;
      double b_mag = bi(i, 0).mag();
      // input-path error through B, word representation of A and B against
      // the certified state and input bounds, plant-side sampling through A,
      // and one truncation per row product
      w_rad[ii] = b_mag * ru + rep_a + rep_b + row_a * c_m_p +
                  static_cast<double>(n + 1) * c_m_p;
    }
  } catch (const fixed_overflow&) {
    return {false, 0, -1};  // plant numbers unrepresentable at this word
  }
  box w_box = box::symmetric(w_rad);

  const Eigen::VectorXd gains = ctrl.gains();
  interval_matrix power = interval_matrix::identity(n);
  box acc(n);  // accumulated disturbances, starts as the zero box
  box cur = spec.init_box;
  // the input functional gets its own power form: composing the gain row
  // with the hulled state box would double-count the init-box correlations
  std::vector<interval> k_power(n);
  for (std::size_t j = 0; j < n; ++j) {
    double g = gains[static_cast<Eigen::Index>(j)];
    k_power[j] = interval(g, g);
  }
  interval u_acc(0.0, 0.0);

  for (int s = 1; s <= k + 1; ++s) {
    if (s > 1) {
      for (std::size_t j = 0; j < n; ++j)
        u_acc = u_acc + k_power[j] * w_box[j];
      std::vector<interval> k_next(n, interval(0.0, 0.0));
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
          k_next[j] = k_next[j] + k_power[i] * m(i, j);
      k_power = std::move(k_next);
      acc = box_sum(acc, power * w_box);
      power = m * power;
      cur = box_sum(power * spec.init_box, acc);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (cur[i].lo < spec.state_box[i].lo || cur[i].hi > spec.state_box[i].hi)
        return {false, s, static_cast<std::ptrdiff_t>(i)};
    }
    if (s <= k) {
      interval u(0.0, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        u = u + k_power[j] * spec.init_box[j];
      u = u + u_acc;
      u = interval(-u.hi, -u.lo) + interval(-ru_ctrl, ru_ctrl);
      if (u.lo < spec.input_bounds.lo || u.hi > spec.input_bounds.hi)
        return {false, s, -1};
    }
  }
  return {};
}

completeness_result verify_complete(const discrete_plant& plant,
                                    const controller& ctrl,
                                    const safety_spec& spec, int k) {
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = 0.0;
  for (std::size_t i = 0; i < spec.n(); ++i) {
    r_min = std::min(r_min, std::min(std::abs(spec.state_box[i].lo),
                                     std::abs(spec.state_box[i].hi)));
    r_max = std::max(r_max, std::max(std::abs(spec.state_box[i].lo),
                                     std::abs(spec.state_box[i].hi)));
  }
  double ratio = r_max > 0.0 ? r_min / r_max : 1.0;
  completeness_result res;
  res.bound =
      completeness_bound(closed_loop_matrix(plant, ctrl), plant.T_s, ratio);
  res.passed = k >= res.bound.k_bar;
  return res;
}

namespace {

run_record record(int iteration, const char* phase, fixed_format fmt,
                  std::string outcome) {
  run_record r;
  r.iteration = iteration;
  r.phase = phase;
  r.precision = fmt.str();
  r.outcome = std::move(outcome);
  return r;
}

}  // namespace

backend_result msv_cegis(const discrete_plant& plant, const safety_spec& spec,
                         const msv_options& opts) {
  using clock = std::chrono::steady_clock;
  const auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(
                         std::chrono::duration<double>(opts.time_budget_s));
  backend_result res;
  res.plant_fmt = opts.schedule.empty() ? fixed_format(13, 3)
                                        : opts.schedule.front();
  if (opts.schedule.empty())
    throw validation_error("precision schedule must not be empty");

  counterexample_set cex;
  spectral_constraint constraint;  // plain strict stability
  std::vector<Eigen::VectorXd> tabu;
  int iteration = 0;

  for (std::size_t level = 0; level < opts.schedule.size(); ++level) {
    const fixed_format plant_fmt = opts.schedule[level];
    res.plant_fmt = plant_fmt;
    cex.clear();  // stale: recorded under a coarser plant word
    int k = static_cast<int>(2 * plant.n());
    bool escalate = false;
    int input_rejections = 0;

    while (!escalate) {
      if (clock::now() > deadline) {
        res.failure = failure_kind::timeout;
        res.iterations = iteration;
        res.k_used = k;
        return res;
      }
      ++iteration;
      synth_options sopts;
      sopts.controller_fmt = opts.controller_fmt;
      sopts.plant_fmt = plant_fmt;
      sopts.dac_fmt = opts.dac_fmt;
      sopts.budget = opts.synth_budget;
      sopts.seed = opts.seed;
      sopts.tabu = tabu;
      auto cand = synthesize_candidate(plant, spec, cex, constraint, sopts);
      if (!cand) {
        res.log.add(record(iteration, "synthesize", plant_fmt,
                           "exhausted: escalating precision"));
        break;
      }
      run_record syn = record(iteration, "synthesize", plant_fmt, "candidate");
      syn.candidate = cand->gains();
      res.log.add(std::move(syn));

      bool resynthesize = false;
      while (!resynthesize && !escalate) {
        auto sres =
            verify_safety(plant, *cand, spec, k, plant_fmt, opts.dac_fmt);
        if (sres) {
          counterexample c;
          c.check = counterexample::kind::trajectory;
          c.k = k;
          c.x0 = sres->x0;
          cex.add(c, spec.init_box);
          run_record r = record(iteration, "safety", plant_fmt,
                                sres->why ==
                                        safety_counterexample::cause::overflow
                                    ? "counterexample: overflow"
                                    : (sres->why == safety_counterexample::
                                                        cause::input_bounds
                                           ? "counterexample: input bounds"
                                           : "counterexample: state bounds"));
          r.cex_iteration = sres->violation_iteration;
          r.cex_x0 = sres->x0;
          res.log.add(std::move(r));
          resynthesize = true;
          break;
        }
        res.log.add(record(iteration, "safety", plant_fmt, "pass"));

        auto pres =
            verify_precision(plant, *cand, spec, k, plant_fmt, opts.dac_fmt);
        if (!pres.passed) {
          // an input-interval overhang is driven by the gain magnitudes, so
          // a finer plant word cannot shrink it: exclude the candidate
          // instead of escalating (bounded, in case every candidate is hot)
          const bool hot_gains =
              pres.coordinate == -1 && pres.violation_iteration > 0 &&
              input_rejections < 8;
          run_record r = record(iteration, "precision", plant_fmt,
                                hot_gains ? "fail: input overhang, candidate "
                                            "excluded"
                                          : "fail: escalating precision");
          r.cex_iteration = pres.violation_iteration;
          res.log.add(std::move(r));
          if (hot_gains) {
            ++input_rejections;
            tabu.push_back(cand->gains());
            resynthesize = true;
          } else {
            escalate = true;
          }
          break;
        }
        res.log.add(record(iteration, "precision", plant_fmt, "pass"));

        completeness_result comp;
        try {
          comp = verify_complete(plant, *cand, spec, k);
        } catch (const repeated_eigenvalues&) {
          tabu.push_back(cand->gains());
          res.log.add(record(iteration, "complete", plant_fmt,
                             "repeated eigenvalues: candidate excluded"));
          resynthesize = true;
          break;
        }
        if (comp.bound.k_bar > opts.k_bar_cap) {
          res.failure = failure_kind::k_bar_explosion;
          res.iterations = iteration;
          res.k_used = k;
          res.log.add(record(iteration, "complete", plant_fmt,
                             "depth bound " + std::to_string(comp.bound.k_bar) +
                                 " beyond cap"));
          return res;
        }
        if (!comp.passed) {
          res.log.add(record(iteration, "complete", plant_fmt,
                             "new depth " + std::to_string(comp.bound.k_bar)));
          k = comp.bound.k_bar;
          continue;  // redo safety and precision at the certified depth
        }
        res.log.add(record(iteration, "complete", plant_fmt, "pass"));
        res.ctrl = *cand;
        res.k_used = k;
        res.iterations = iteration;
        return res;
      }
    }
  }
  res.failure = failure_kind::unsat_at_max_precision;
  res.iterations = iteration;
  res.k_used = static_cast<int>(2 * plant.n());
  return res;
}

}  // namespace ctrlsynth
