// Reach-tube back-end: interval matrix powers with a certified geometric
// tail, suspect-vertex extraction, concrete replay, and the CEGIS driver.

#include "ctrlsynth/verify_aa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ctrlsynth/stability.hpp"

namespace ctrlsynth {

namespace {

double pow_up(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r = mul_up(r, base);
  return r;
}

box zero_box(std::size_t n) {
  return box::symmetric(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
}

double max_box_mag(const box& b) {
  double r = 0.0;
  for (const auto& d : b.dims) r = std::max(r, d.mag());
  return r;
}

// a^0 .. a^count, each from one product of two half powers; splitting keeps
// the entry radii polynomial in the exponent, where the sequential recurrence
// compounds them through |a| and wraps once |a| has spectral radius above one
std::vector<interval_matrix> interval_powers(const interval_matrix& a,
                                             int count) {
  std::vector<interval_matrix> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(interval_matrix::identity(a.rows));
  if (count >= 1) out.push_back(a);
  for (int k = 2; k <= count; ++k)
    out.push_back(out[static_cast<std::size_t>(k / 2)] *
                  out[static_cast<std::size_t>(k - k / 2)]);
  return out;
}

struct tail_certificate {
  box tail;
  int power = 1;
  double factor = 0.0;
  double conditioning = 1.0;
  double extra = 0.0;  // certified radius beyond the horizon's open sum
};

// real pseudo-eigenvector basis of the nominal matrix, its column-normalized
// variant, then identity as a last resort
std::vector<Eigen::MatrixXd> basis_candidates(const Eigen::MatrixXd& a_cl) {
  std::vector<Eigen::MatrixXd> out;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a_cl);
  if (es.info() == Eigen::Success) {
    const Eigen::MatrixXd v = es.pseudoEigenvectors();
    if (v.allFinite()) {
      out.push_back(v);
      Eigen::MatrixXd scaled = v;
      bool ok = true;
      for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double m = scaled.col(j).cwiseAbs().maxCoeff();
        if (!(m > 0.0) || !std::isfinite(m)) {
          ok = false;
          break;
        }
        scaled.col(j) /= m;
      }
      if (ok) out.push_back(scaled);
    }
  }
  out.push_back(Eigen::MatrixXd::Identity(a_cl.rows(), a_cl.cols()));
  return out;
}

// In the basis v the enclosure m of v^-1 A v admits, for a fixed A in the
// model set, ||A^j x||_inf <= ||v||_inf ||m^j||_inf ||v^-1 x||_inf.  A power
// p with eta = ||m^p||_inf < 1 bounds every later power geometrically:
// ||m^j||_inf <= c_max eta^floor(j/p) with c_max = max_{r<p} ||m^r||_inf.
// The tail adds, on top of the horizon's accumulated disturbance sum, the
// decayed image of the initial box (j >= k_star) and the remaining
// disturbance series sum_{j>=k_star} ||A^j w||, bounded by grouping powers of
// p: at most p terms share each exponent floor(j/p).  The first contracting
// power is not generally the best: a rotation block dips barely below one
// and the series then divides by 1 - eta, so every contracting power up to
// the limit is evaluated and the smallest certified tail is kept.
std::optional<tail_certificate> try_basis(const Eigen::MatrixXd& v,
                                          const interval_matrix& a_int,
                                          const box& init, const box& w,
                                          const box& s_ext, int k_star,
                                          int power_limit) {
  const std::size_t n = a_int.rows;
  const interval_matrix vint = interval_matrix::exact(v);
  interval_matrix m, vinv;
  try {
    m = solve(vint, a_int * vint);
    vinv = solve(vint, interval_matrix::identity(n));
  } catch (const singular_matrix&) {
    return std::nullopt;
  }

  const double c_v = vint.inf_norm_upper();
  const double r_init = max_box_mag(vinv * init);
  const double r_w = max_box_mag(vinv * w);

  const std::vector<interval_matrix> m_pow = interval_powers(m, power_limit);
  double c_max = 1.0;  // running max of ||m^0..r-1||_inf
  int best_p = 0;
  double best_eta = 0.0;
  double best_extra = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= power_limit; ++r) {
    const double c_r = m_pow[static_cast<std::size_t>(r)].inf_norm_upper();
    if (!std::isfinite(c_r) || c_r > 1e30) break;  // enclosure diverged
    if (c_r < 1.0) {
      const int q0 = k_star / r;
      const double eta_q = pow_up(c_r, q0);
      const double lead = mul_up(c_v, c_max);
      const double hom = mul_up(mul_up(lead, eta_q), r_init);
      const double den = sub_down(1.0, c_r);
      if (den > 0.0) {
        const double rem = div_up(
            mul_up(mul_up(lead, static_cast<double>(r)), mul_up(eta_q, r_w)),
            den);
        const double extra = add_up(hom, rem);
        if (std::isfinite(extra) && extra < best_extra) {
          best_extra = extra;
          best_p = r;
          best_eta = c_r;
        }
      }
      if (c_r < 1e-12) break;  // later powers cannot tighten the tail
    }
    c_max = std::max(c_max, c_r);
  }
  if (best_p == 0) return std::nullopt;

  tail_certificate cert;
  cert.power = best_p;
  cert.factor = best_eta;
  cert.conditioning = mul_up(c_v, vinv.inf_norm_upper());
  cert.extra = best_extra;
  Eigen::VectorXd rad(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    rad[static_cast<Eigen::Index>(i)] =
        add_up(s_ext.dims[i].mag(), best_extra);
  cert.tail = box::symmetric(rad);
  return cert;
}

}  // namespace

reach_tube compute_reach_tube(const discrete_plant& plant,
                              const controller& ctrl, const safety_spec& spec,
                              const noise_model& noise, int k_star,
                              const tube_options& opts) {
  if (k_star < 1) throw validation_error("tube horizon must be >= 1");
  const std::size_t n = spec.n();
  if (plant.n() != n ||
      ctrl.gains().size() != static_cast<Eigen::Index>(n))
    throw dimension_mismatch("plant, specification and gains disagree");

  reach_tube tube;
  tube.k_star = k_star;
  tube.gains = ctrl.gains();
  tube.noise_radius = noise.radius();
  tube.noise_routed = opts.noise_through_input;

  Eigen::VectorXd w_rad(static_cast<Eigen::Index>(n));
  if (opts.noise_through_input) {
    const interval_matrix b_int = plant.b_interval();
    for (std::size_t i = 0; i < n; ++i)
      w_rad[static_cast<Eigen::Index>(i)] =
          mul_up(b_int(i, 0).mag(), tube.noise_radius);
  } else {
    w_rad.setConstant(tube.noise_radius);
  }
  tube.w_radius = w_rad;
  const box w = box::symmetric(w_rad);

  const interval_matrix a_int = closed_loop_interval(plant, ctrl);
  const Eigen::MatrixXd a_cl = closed_loop_matrix(plant, ctrl);

  tube.boxes.reserve(static_cast<std::size_t>(k_star));
  tube.powers.reserve(static_cast<std::size_t>(k_star));
  tube.boxes.push_back(spec.init_box);
  tube.powers.push_back(Eigen::MatrixXd::Identity(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));

  // power form: every box is A^{k-1} X0 + sum_{i<=k-2} A^i W, never a
  // recursive image of the previous box; split powers keep the radii tame
  const std::vector<interval_matrix> a_pow =
      interval_powers(a_int, std::max(k_star - 1, 1));
  box acc = zero_box(n);
  for (int k = 2; k <= k_star; ++k) {
    acc = box_sum(acc, a_pow[static_cast<std::size_t>(k - 2)] * w);
    tube.boxes.push_back(
        box_sum(a_pow[static_cast<std::size_t>(k - 1)] * spec.init_box, acc));
    Eigen::MatrixXd next = a_cl * tube.powers.back();
    tube.powers.push_back(std::move(next));
  }
  const box s_ext = box_sum(
      acc, a_pow[static_cast<std::size_t>(std::max(k_star - 1, 0))] * w);

  std::optional<tail_certificate> cert;
  for (const auto& v : basis_candidates(a_cl)) {
    auto c =
        try_basis(v, a_int, spec.init_box, w, s_ext, k_star, opts.power_limit);
    if (c && (!cert || c->extra < cert->extra)) cert = std::move(c);
  }
  if (!cert)
    throw no_contraction_certificate(
        "no basis certified a contracting closed-loop power");
  tube.tail = cert->tail;
  tube.contraction_power = cert->power;
  tube.contraction_factor = cert->factor;
  tube.conditioning = cert->conditioning;
  return tube;
}

namespace {

struct overhang {
  double amount = 0.0;
  std::size_t coordinate = 0;
  bool high_side = true;
};

// worst per-coordinate excess of b over the safe box; ties keep the lowest
// coordinate, equal sides prefer the high one
std::optional<overhang> worst_overhang(const box& b, const box& safe) {
  std::optional<overhang> worst;
  for (std::size_t i = 0; i < b.dims.size(); ++i) {
    const double over_hi = b.dims[i].hi - safe.dims[i].hi;
    const double over_lo = safe.dims[i].lo - b.dims[i].lo;
    const double amount = std::max(over_hi, over_lo);
    if (amount <= 0.0) continue;
    if (!worst || amount > worst->amount)
      worst = overhang{amount, i, over_hi >= over_lo};
  }
  return worst;
}

// vertex of the initial box driving the flagged coordinate outward: the sign
// pattern of the power's row decides each entry; entries the row ignores
// follow the gain signs so the control effort also pushes outward
Eigen::VectorXd vertex_for(const Eigen::VectorXd& row,
                           const Eigen::VectorXd& gains, const box& init,
                           bool high_side) {
  const Eigen::Index n = row.size();
  Eigen::VectorXd x0(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t ju = static_cast<std::size_t>(j);
    bool pick_hi;
    if (row[j] > 0.0)
      pick_hi = high_side;
    else if (row[j] < 0.0)
      pick_hi = !high_side;
    else
      pick_hi = (gains[j] >= 0.0) == high_side;
    x0[j] = pick_hi ? init.dims[ju].hi : init.dims[ju].lo;
  }
  return x0;
}

}  // namespace

tube_check check_tube(const reach_tube& tube, const safety_spec& spec) {
  tube_check out;
  for (int k = 1; k <= tube.k_star; ++k) {
    const auto worst =
        worst_overhang(tube.boxes[static_cast<std::size_t>(k - 1)],
                       spec.state_box);
    if (!worst) continue;
    out.passed = false;
    out.suspect.k = k;
    out.suspect.from_tail = false;
    out.suspect.coordinate = worst->coordinate;
    const Eigen::VectorXd row =
        tube.powers[static_cast<std::size_t>(k - 1)]
            .row(static_cast<Eigen::Index>(worst->coordinate))
            .transpose();
    out.suspect.x0 =
        vertex_for(row, tube.gains, spec.init_box, worst->high_side);
    return out;
  }
  const auto worst = worst_overhang(tube.tail, spec.state_box);
  if (worst) {
    out.passed = false;
    out.suspect.k = tube.k_star + 1;
    out.suspect.from_tail = true;
    out.suspect.coordinate = worst->coordinate;
    const Eigen::VectorXd no_row = Eigen::VectorXd::Zero(tube.gains.size());
    out.suspect.x0 =
        vertex_for(no_row, tube.gains, spec.init_box, worst->high_side);
  }
  return out;
}

confirm_result confirm_or_refine(const tube_suspect& suspect,
                                 const reach_tube& tube,
                                 const discrete_plant& plant,
                                 const controller& ctrl,
                                 const safety_spec& spec) {
  confirm_result out;
  const Eigen::MatrixXd a_cl = closed_loop_matrix(plant, ctrl);
  const Eigen::Index n = a_cl.rows();
  const int horizon = suspect.from_tail ? 2 * tube.k_star + 1 : suspect.k;

  // same recurrence as the candidate validator's point-reach check, so a
  // confirmed violation here is guaranteed to re-fail during resynthesis
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rad = Eigen::VectorXd::Zero(n);
  for (int iter = 2; iter <= horizon; ++iter) {
    if (tube.noise_routed)
      rad += power.cwiseAbs() * tube.w_radius;
    else
      rad += power.cwiseAbs().rowwise().sum() * tube.noise_radius;
    power = a_cl * power;
    const Eigen::VectorXd center = power * suspect.x0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t iu = static_cast<std::size_t>(i);
      if (center[i] - rad[i] >= spec.state_box.dims[iu].lo &&
          center[i] + rad[i] <= spec.state_box.dims[iu].hi)
        continue;
      out.real = true;
      out.cex.check = counterexample::kind::at_iteration;
      out.cex.k = iter;
      out.cex.x0 = suspect.x0;
      return out;
    }
  }
  return out;
}

spectral_constraint refine_spectrum(const std::vector<counterexample>& cexs,
                                    const spectral_constraint& current,
                                    double r0, double r_noise, double r_safe) {
  spectral_constraint next = current;
  for (const auto& c : cexs) {
    const int k = std::max(1, c.k);
    const auto decay = [&](double rho) {
      return std::pow(rho, k) * r0 + r_noise / (1.0 - rho);
    };
    double rho_k;
    if (r_noise <= 0.0 && r0 <= r_safe) {
      rho_k = 1.0;  // unconstrained: even a non-decaying loop stays inside
    } else {
      if (decay(0.0) > r_safe)
        throw infeasible_constraint(
            "per-step disturbance alone exceeds the safe radius");
      double lo = 0.0;
      double hi = 1.0;
      while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        if (decay(mid) <= r_safe)
          lo = mid;
        else
          hi = mid;
      }
      rho_k = lo;
    }
    next.rho_max = std::min(next.rho_max, rho_k);
    if (std::find(next.flagged_iterations.begin(),
                  next.flagged_iterations.end(),
                  k) == next.flagged_iterations.end())
      next.flagged_iterations.push_back(k);
  }
  std::sort(next.flagged_iterations.begin(), next.flagged_iterations.end());
  return next;
}

namespace {

run_record record(int iteration, std::string phase, fixed_format fmt,
                  std::string outcome) {
  run_record r;
  r.iteration = iteration;
  r.phase = std::move(phase);
  r.precision = fmt.str();
  r.outcome = std::move(outcome);
  return r;
}

double safe_box_ratio(const safety_spec& spec) {
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = 0.0;
  for (const auto& d : spec.state_box.dims) {
    r_min = std::min(r_min, std::min(std::abs(d.lo), std::abs(d.hi)));
    r_max = std::max(r_max, std::max(std::abs(d.lo), std::abs(d.hi)));
  }
  return r_max > 0.0 ? r_min / r_max : 1.0;
}

}  // namespace

backend_result aa_cegis(const discrete_plant& plant, const safety_spec& spec,
                        const aa_options& opts) {
  using clock = std::chrono::steady_clock;
  const auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(
                         std::chrono::duration<double>(opts.time_budget_s));
  constexpr int k_star_cap = 8192;

  backend_result res;
  res.plant_fmt = opts.controller_fmt;
  const fixed_format dac = opts.dac_fmt.value_or(opts.controller_fmt);

  counterexample_set cex;
  std::vector<counterexample> confirmed;
  spectral_constraint constraint;
  std::vector<Eigen::VectorXd> tabu;
  const double r0 = max_init_magnitude(spec);
  const double r_safe = min_safe_magnitude(spec);
  const double ratio = safe_box_ratio(spec);

  int iteration = 0;
  bool out_of_time = false;
  while (!out_of_time) {
    if (clock::now() > deadline) {
      res.failure = failure_kind::timeout;
      break;
    }
    ++iteration;
    synth_options sopts;
    sopts.controller_fmt = opts.controller_fmt;
    sopts.plant_fmt = opts.controller_fmt;
    sopts.dac_fmt = opts.dac_fmt;
    sopts.budget = opts.synth_budget;
    sopts.seed = opts.seed;
    sopts.tabu = tabu;
    sopts.uniform_noise = true;  // screen against the tube's concrete model
    auto cand = synthesize_candidate(plant, spec, cex, constraint, sopts);
    if (!cand) {
      res.log.add(
          record(iteration, "synthesize", opts.controller_fmt, "exhausted"));
      res.failure = failure_kind::unsat;
      break;
    }
    run_record syn =
        record(iteration, "synthesize", opts.controller_fmt, "candidate");
    syn.candidate = cand->gains();
    res.log.add(std::move(syn));

    const noise_model nm = build_noise_model(opts.controller_fmt, dac, *cand);

    int k_star = opts.k_star;
    if (k_star <= 0) {
      try {
        const auto bound = completeness_bound(closed_loop_matrix(plant, *cand),
                                              plant.T_s, ratio);
        k_star = std::max(2 * bound.k_bar, 32);
      } catch (const repeated_eigenvalues&) {
        tabu.push_back(cand->gains());
        res.log.add(record(iteration, "tube", opts.controller_fmt,
                           "repeated eigenvalues: candidate excluded"));
        continue;
      }
    }
    k_star = std::min(k_star, k_star_cap);

    int refines = 0;
    bool resynthesize = false;
    while (!resynthesize) {
      if (clock::now() > deadline) {
        res.failure = failure_kind::timeout;
        out_of_time = true;
        break;
      }
      res.k_used = k_star;
      reach_tube tube;
      try {
        tube = compute_reach_tube(plant, *cand, spec, nm, k_star, opts.tube);
      } catch (const no_contraction_certificate&) {
        tabu.push_back(cand->gains());
        res.log.add(record(iteration, "tube", opts.controller_fmt,
                           "no contraction certificate: candidate excluded"));
        break;
      }
      const auto chk = check_tube(tube, spec);
      if (chk.passed) {
        res.log.add(record(iteration, "tube", opts.controller_fmt, "pass"));
        res.ctrl = *cand;
        res.k_used = k_star;
        res.iterations = iteration;
        return res;
      }
      {
        run_record r = record(
            iteration, "tube", opts.controller_fmt,
            chk.suspect.from_tail ? "violation in tail" : "violation");
        r.cex_iteration = chk.suspect.k;
        r.cex_x0 = chk.suspect.x0;
        res.log.add(std::move(r));
      }
      const auto conf =
          confirm_or_refine(chk.suspect, tube, plant, *cand, spec);
      if (conf.real) {
        run_record r = record(iteration, "confirm", opts.controller_fmt,
                              "real counterexample");
        r.cex_iteration = conf.cex.k;
        r.cex_x0 = conf.cex.x0;
        res.log.add(std::move(r));
        if (!cex.add(conf.cex, spec.init_box)) {
          // admitted against this exact record yet violating it: exclude
          tabu.push_back(cand->gains());
          res.log.add(record(iteration, "confirm", opts.controller_fmt,
                             "stale counterexample: candidate excluded"));
          break;
        }
        confirmed.push_back(conf.cex);
        try {
          constraint =
              refine_spectrum(confirmed, constraint, r0, nm.radius(), r_safe);
        } catch (const infeasible_constraint&) {
          res.log.add(
              record(iteration, "refine", opts.controller_fmt, "infeasible"));
          res.failure = failure_kind::infeasible;
          res.iterations = iteration;
          return res;
        }
        res.log.add(record(iteration, "refine", opts.controller_fmt,
                           "decay cap " + std::to_string(constraint.rho_max)));
        resynthesize = true;
      } else {
        if (refines >= opts.refine_cap || k_star >= k_star_cap) {
          res.log.add(record(iteration, "confirm", opts.controller_fmt,
                             "spurious: refinement exhausted"));
          res.failure = failure_kind::refinement_exhausted;
          res.iterations = iteration;
          return res;
        }
        ++refines;
        k_star = std::min(2 * k_star, k_star_cap);
        res.log.add(record(iteration, "confirm", opts.controller_fmt,
                           "spurious: horizon " + std::to_string(k_star)));
      }
    }
  }
  res.iterations = iteration;
  return res;
}

}  // namespace ctrlsynth
