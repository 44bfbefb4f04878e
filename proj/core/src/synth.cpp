#include "ctrlsynth/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "ctrlsynth/stability.hpp"

namespace ctrlsynth {

bool counterexample::operator==(const counterexample& other) const {
  if (check != other.check || k != other.k || x0.size() != other.x0.size())
    return false;
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (x0[i] != other.x0[i]) return false;
  return true;
}

bool counterexample_set::add(const counterexample& c, const box& init_box) {
  if (!init_box.contains(c.x0))
    throw validation_error("counterexample start lies outside the initial box");
  if (c.k < 1) throw validation_error("counterexample iteration must be >= 1");
  for (const auto& e : entries)
    if (e == c) return false;
  entries.push_back(c);
  return true;
}

bool gain_bounds::admits(const Eigen::VectorXd& gains) const {
  if (static_cast<std::size_t>(gains.size()) != weights.size()) return false;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < gains.size(); ++i)
    sum += std::abs(gains[i]) * weights[static_cast<std::size_t>(i)];
  return sum <= input_mag;
}

double gain_bounds::entry_limit(std::size_t i) const {
  if (i >= weights.size() || weights[i] == 0.0)
    return std::numeric_limits<double>::infinity();
  return input_mag / weights[i];
}

gain_bounds compute_gain_bounds(const safety_spec& spec) {
  gain_bounds gb;
  gb.weights.reserve(spec.n());
  for (std::size_t i = 0; i < spec.n(); ++i)
    gb.weights.push_back(
        std::max(std::abs(spec.init_box[i].lo), std::abs(spec.init_box[i].hi)));
  gb.input_mag = std::max(std::abs(spec.input_bounds.lo),
                          std::abs(spec.input_bounds.hi));
  return gb;
}

bool spectral_constraint::admits(double rho, double r0, double r_noise,
                                 double r_safe) const {
  if (flagged_iterations.empty()) return true;
  if (rho >= 1.0) return false;
  for (int k : flagged_iterations) {
    double decayed = std::pow(rho, k) * r0 + r_noise / (1.0 - rho);
    if (decayed > r_safe) return false;
  }
  return true;
}

box point_reach_box(const Eigen::MatrixXd& a_cl, const Eigen::VectorXd& x0,
                    int iter, double r_noise) {
  if (iter < 1) throw validation_error("iteration index must be >= 1");
  const Eigen::Index n = a_cl.rows();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rad = Eigen::VectorXd::Zero(n);
  for (int i = 0; i + 2 <= iter; ++i) {
    rad += power.cwiseAbs().rowwise().sum() * r_noise;
    power = a_cl * power;
  }
  Eigen::VectorXd center = power * x0;
  box out;
  out.dims.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    out.dims.push_back(interval(center[i] - rad[i], center[i] + rad[i]));
  return out;
}

double max_init_magnitude(const safety_spec& spec) {
  double r = 0.0;
  for (std::size_t i = 0; i < spec.n(); ++i)
    r = std::max(r, std::max(std::abs(spec.init_box[i].lo),
                             std::abs(spec.init_box[i].hi)));
  return r;
}

double min_safe_magnitude(const safety_spec& spec) {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.n(); ++i)
    r = std::min(r, std::min(std::abs(spec.state_box[i].lo),
                             std::abs(spec.state_box[i].hi)));
  return r;
}

namespace {

double spectral_radius_estimate(const Eigen::MatrixXd& a_cl) {
  double rho = 0.0;
  for (const auto& z : eigenvalues(a_cl)) rho = std::max(rho, std::abs(z));
  return rho;
}

// fixed screening parameters: the hull replay runs this many steps and an
// overhang larger than this aborts the replay early
constexpr int kScreenHorizon = 128;
constexpr double kScreenAbort = 2.0;

// candidate-independent pieces of the per-row disturbance radii the margin
// screen assumes: exact word-representation offsets of the plant numbers
// weighted by the certified bounds, plus the row magnitudes
struct screen_model {
  Eigen::VectorXd rep_state;   // sum_j |repr(a_ij) - a_ij| * safe_j
  Eigen::VectorXd rep_input;   // |repr(b_i) - b_i|
  Eigen::VectorXd row_a;       // sum_j |a_ij|
  Eigen::VectorXd b_abs;       // |b_i|
  double trunc = 0.0;          // (n + 1) * c_m of the plant word
  double c_m = 0.0;
  double u_mag = 0.0;
  bool representable = true;   // plant numbers fit the plant word
  bool uniform = false;

  screen_model(const discrete_plant& plant, const safety_spec& spec,
               const synth_options& opts) {
    const Eigen::Index n = static_cast<Eigen::Index>(plant.n());
    rep_state = Eigen::VectorXd::Zero(n);
    rep_input = Eigen::VectorXd::Zero(n);
    row_a = Eigen::VectorXd::Zero(n);
    b_abs = Eigen::VectorXd::Zero(n);
    c_m = opts.plant_fmt.step();
    trunc = static_cast<double>(n + 1) * c_m;
    u_mag = std::max(std::abs(spec.input_bounds.lo),
                     std::abs(spec.input_bounds.hi));
    uniform = opts.uniform_noise;
    try {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          double a = plant.A_d(i, j);
          double err = std::abs(quantize(a, opts.plant_fmt).value() - a);
          rep_state[i] +=
              err * spec.state_box[static_cast<std::size_t>(j)].mag();
          row_a[i] += std::abs(a);
        }
        double b = plant.B_d(i, 0);
        rep_input[i] = std::abs(quantize(b, opts.plant_fmt).value() - b);
        b_abs[i] = std::abs(b);
      }
    } catch (const fixed_overflow&) {
      representable = false;
    }
  }

  Eigen::VectorXd per_step(double ru, double noise_radius) const {
    if (uniform)
      return Eigen::VectorXd::Constant(rep_state.size(), noise_radius);
    return b_abs * ru + rep_state + rep_input * (u_mag + ru) + row_a * c_m +
           Eigen::VectorXd::Constant(rep_state.size(), trunc);
  }
};

// double-precision power-form replay of the state hull and the applied-input
// range under the screen's disturbance radii; returns the largest relative
// overhang beyond the safe box or the input bounds (0 when none)
double hull_screen(const screen_model& sm, const safety_spec& spec,
                   const synth_options& opts, const controller& ctrl,
                   const Eigen::MatrixXd& a_cl, double noise_radius) {
  if (!sm.representable) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = a_cl.rows();
  const fixed_format cf = ctrl.format();
  const fixed_format dac = opts.dac_fmt.value_or(cf);
  const double q2 = dac.fraction_bits < cf.fraction_bits ? dac.step() : 0.0;
  const double u_requant =
      opts.plant_fmt.fraction_bits < dac.fraction_bits ? sm.c_m : 0.0;
  const double ru_ctrl = ctrl.abs_gain_sum() * cf.step() +
                         static_cast<double>(n) * cf.step();
  const double ru = ru_ctrl + q2 + u_requant;
  const Eigen::VectorXd w = sm.per_step(ru, noise_radius);

  Eigen::VectorXd c0(n), r0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const interval& d = spec.init_box[static_cast<std::size_t>(i)];
    c0[i] = (d.hi + d.lo) / 2.0;
    r0[i] = (d.hi - d.lo) / 2.0;
  }
  const Eigen::VectorXd gains = ctrl.gains();

  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  Eigen::RowVectorXd k_power = gains.transpose();
  double u_acc = 0.0;
  double worst = 0.0;
  for (int s = 1; s <= kScreenHorizon; ++s) {
    if (s > 1) {
      u_acc += k_power.cwiseAbs().dot(w);
      k_power = k_power * a_cl;
      acc += power.cwiseAbs() * w;
      power = a_cl * power;
    }
    Eigen::VectorXd center = power * c0;
    Eigen::VectorXd rad = power.cwiseAbs() * r0 + acc;
    for (Eigen::Index i = 0; i < n; ++i) {
      const interval& sb = spec.state_box[static_cast<std::size_t>(i)];
      double over = std::max(center[i] + rad[i] - sb.hi,
                             sb.lo - (center[i] - rad[i]));
      if (over > 0.0) worst = std::max(worst, over / sb.mag());
    }
    double uc = k_power.dot(c0);
    double ur = k_power.cwiseAbs().dot(r0) + u_acc + ru_ctrl;
    double u_over = std::max(-uc + ur - spec.input_bounds.hi,
                             spec.input_bounds.lo - (-uc - ur));
    if (u_over > 0.0)
      worst = std::max(worst, u_over / std::max(sm.u_mag, 1e-30));
    if (worst > kScreenAbort) break;
  }
  return worst;
}

bool in_tabu(const synth_options& opts, const Eigen::VectorXd& gains) {
  for (const auto& t : opts.tabu) {
    if (t.size() != gains.size()) continue;
    bool same = true;
    for (Eigen::Index i = 0; i < gains.size(); ++i)
      if (t[i] != gains[i]) {
        same = false;
        break;
      }
    if (same) return true;
  }
  return false;
}

// replays under the same deterministic adversary the safety stage uses
bool counterexamples_pass(const discrete_plant& plant, const safety_spec& spec,
                          const counterexample_set& cex,
                          const synth_options& opts, const controller& ctrl,
                          const Eigen::MatrixXd& a_cl, double r_noise,
                          int* failed) {
  int bad = 0;
  noise_model nm =
      build_noise_model(opts.controller_fmt,
                        opts.dac_fmt.value_or(opts.controller_fmt), ctrl);
  for (const auto& c : cex.entries) {
    bool ok = true;
    if (c.check == counterexample::kind::trajectory) {
      try {
        trace tr = simulate(plant, ctrl, c.x0, c.k,
                            noise_policy::worst_case_sign, spec, opts.plant_fmt,
                            nm, 0, opts.dac_fmt);
        for (std::size_t s = 0; s < tr.entries.size() && ok; ++s) {
          const auto& e = tr.entries[s];
          if (!spec.state_box.contains(e.x)) ok = false;
          if (s + 1 < tr.entries.size() && e.saturated) ok = false;
        }
      } catch (const fixed_overflow&) {
        ok = false;
      }
    } else {
      box reach = point_reach_box(a_cl, c.x0, c.k, r_noise);
      ok = spec.state_box.contains(reach);
    }
    if (!ok) ++bad;
  }
  if (failed) *failed = bad;
  return bad == 0;
}

}  // namespace

bool candidate_admissible(const discrete_plant& plant, const safety_spec& spec,
                          const counterexample_set& cex,
                          const spectral_constraint& constraint,
                          const synth_options& opts, const controller& ctrl) {
  if (ctrl.n() != plant.n()) return false;
  if (ctrl.format() != opts.controller_fmt) return false;
  Eigen::VectorXd gains = ctrl.gains();
  if (in_tabu(opts, gains)) return false;
  if (!compute_gain_bounds(spec).admits(gains)) return false;

  if (!jury_check_margin(char_poly::of(closed_loop_rational(plant, ctrl)),
                         constraint.rho_max))
    return false;

  Eigen::MatrixXd a_cl = closed_loop_matrix(plant, ctrl);
  noise_model nm =
      build_noise_model(opts.controller_fmt,
                        opts.dac_fmt.value_or(opts.controller_fmt), ctrl);
  if (!constraint.admits(spectral_radius_estimate(a_cl), max_init_magnitude(spec),
                         nm.radius(), min_safe_magnitude(spec)))
    return false;
  if (hull_screen(screen_model(plant, spec, opts), spec, opts, ctrl, a_cl,
                  nm.radius()) > 0.0)
    return false;

  return counterexamples_pass(plant, spec, cex, opts, ctrl, a_cl, nm.radius(),
                              nullptr);
}

namespace {

using raw_vec = std::vector<std::int64_t>;

controller make_controller(const raw_vec& raws, fixed_format fmt) {
  std::vector<fixed_value> k;
  k.reserve(raws.size());
  for (std::int64_t r : raws) k.emplace_back(r, fmt);
  return controller(std::move(k));
}

raw_vec nearest_raws(const Eigen::VectorXd& gains, fixed_format fmt) {
  raw_vec out(static_cast<std::size_t>(gains.size()));
  const double scale = 1.0 / fmt.step();
  const std::int64_t cap = fmt.max_raw();
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    double scaled = gains[i] * scale;
    std::int64_t raw =
        std::isfinite(scaled)
            ? static_cast<std::int64_t>(std::llround(
                  std::clamp(scaled, -static_cast<double>(cap),
                             static_cast<double>(cap))))
            : 0;
    out[static_cast<std::size_t>(i)] = raw;
  }
  return out;
}

// lexicographic objective: input-budget violation, stability-margin deficit,
// hull overhang, failed counterexamples, then the spectral radius itself
struct search_score {
  double gain_violation = 0.0;
  double stab_deficit = 0.0;
  double hull_overhang = 0.0;
  int cex_failed = 0;
  double rho = 0.0;

  bool operator<(const search_score& o) const {
    if (gain_violation != o.gain_violation)
      return gain_violation < o.gain_violation;
    if (stab_deficit != o.stab_deficit) return stab_deficit < o.stab_deficit;
    if (hull_overhang != o.hull_overhang)
      return hull_overhang < o.hull_overhang;
    if (cex_failed != o.cex_failed) return cex_failed < o.cex_failed;
    return rho < o.rho;
  }
  bool clean() const {
    return gain_violation == 0.0 && stab_deficit == 0.0 &&
           hull_overhang == 0.0 && cex_failed == 0;
  }
};

struct search_state {
  const discrete_plant& plant;
  const safety_spec& spec;
  const counterexample_set& cex;
  const spectral_constraint& constraint;
  const synth_options& opts;
  gain_bounds bounds;
  screen_model screen;
  double r0;
  double r_safe;
  int evaluations_left;

  bool evaluate(const raw_vec& raws, search_score& out) {
    if (evaluations_left <= 0) return false;
    --evaluations_left;
    controller ctrl = make_controller(raws, opts.controller_fmt);
    Eigen::VectorXd gains = ctrl.gains();
    search_score s;
    if (in_tabu(opts, gains)) {
      s.gain_violation = std::numeric_limits<double>::infinity();
      out = s;
      return true;
    }
    double wsum = 0.0;
    for (Eigen::Index i = 0; i < gains.size(); ++i)
      wsum += std::abs(gains[i]) * bounds.weights[static_cast<std::size_t>(i)];
    s.gain_violation = std::max(0.0, wsum - bounds.input_mag);

    Eigen::MatrixXd a_cl = closed_loop_matrix(plant, ctrl);
    s.rho = spectral_radius_estimate(a_cl);
    s.stab_deficit = std::max(0.0, s.rho - constraint.rho_max);
    noise_model nm =
        build_noise_model(opts.controller_fmt,
                          opts.dac_fmt.value_or(opts.controller_fmt), ctrl);
    if (!constraint.admits(s.rho, r0, nm.radius(), r_safe))
      s.stab_deficit = std::max(s.stab_deficit, 1e-3);
    if (s.gain_violation == 0.0 && s.stab_deficit == 0.0) {
      s.hull_overhang = hull_screen(screen, spec, opts, ctrl, a_cl,
                                    nm.radius());
      if (s.hull_overhang == 0.0) {
        counterexamples_pass(plant, spec, cex, opts, ctrl, a_cl, nm.radius(),
                             &s.cex_failed);
      } else {
        s.cex_failed = static_cast<int>(cex.size());
      }
    } else {
      s.cex_failed = static_cast<int>(cex.size());
    }
    out = s;
    return true;
  }
};

bool raw_less(const raw_vec& a, const raw_vec& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// best-improvement coordinate descent over +-2^j raw-unit moves
bool hill_climb(search_state& st, raw_vec raws, raw_vec& found) {
  static constexpr std::array<std::int64_t, 10> kMoves = {
      1, -1, 4, -4, 16, -16, 64, -64, 256, -256};
  const std::int64_t cap = st.opts.controller_fmt.max_raw();
  search_score cur;
  if (!st.evaluate(raws, cur)) return false;
  for (;;) {
    if (cur.clean()) {
      controller ctrl = make_controller(raws, st.opts.controller_fmt);
      if (candidate_admissible(st.plant, st.spec, st.cex, st.constraint,
                               st.opts, ctrl)) {
        found = raws;
        return true;
      }
    }
    bool improved = false;
    raw_vec best_raws;
    search_score best = cur;
    for (std::size_t i = 0; i < raws.size(); ++i) {
      for (std::int64_t mv : kMoves) {
        raw_vec next = raws;
        next[i] += mv;
        if (next[i] > cap || next[i] < -cap) continue;
        search_score s;
        if (!st.evaluate(next, s)) return false;
        if (s < best) {
          best = s;
          best_raws = next;
          improved = true;
        } else if (improved && !(best < s) && raw_less(next, best_raws)) {
          best_raws = next;  // equal objective: keep the lowest raw vector
        }
      }
    }
    if (!improved) return false;
    raws = best_raws;
    cur = best;
  }
}

// gain row placing the closed-loop roots at the requested poles; empty when
// the controllability matrix is numerically singular
std::optional<Eigen::VectorXd> place_poles(const discrete_plant& plant,
                                           const std::vector<double>& poles) {
  const Eigen::Index n = static_cast<Eigen::Index>(plant.n());
  Eigen::MatrixXd ctrb(n, n);
  Eigen::MatrixXd col = plant.B_d;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = plant.A_d * col;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(ctrb);
  double det = std::abs(lu.determinant());
  double scale = std::max(1e-30, std::pow(ctrb.cwiseAbs().maxCoeff(),
                                          static_cast<double>(n)));
  if (!(det > 1e-12 * scale)) return std::nullopt;
  Eigen::MatrixXd chi = Eigen::MatrixXd::Identity(n, n);
  for (double p : poles)
    chi = chi * (plant.A_d - p * Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
  en[n - 1] = 1.0;
  // k^T = e_n^T C^{-1} chi  ->  k = chi^T (C^{-T} e_n)
  Eigen::VectorXd y =
      Eigen::PartialPivLU<Eigen::MatrixXd>(ctrb.transpose()).solve(en);
  Eigen::VectorXd k = chi.transpose() * y;
  if (!k.allFinite()) return std::nullopt;
  return k;
}

void pole_grids(std::size_t n, std::vector<std::vector<double>>& out) {
  static constexpr std::array<double, 11> kPoles = {
      0.0, 0.125, 0.25, 0.375, 0.5, -0.125, -0.25, 0.625, 0.75, -0.375, -0.5};
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    std::vector<double> poles(n);
    for (std::size_t i = 0; i < n; ++i) poles[i] = kPoles[idx[i]];
    out.push_back(std::move(poles));
    // next nondecreasing index tuple
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (idx[i] + 1 < kPoles.size()) {
        ++idx[i];
        for (std::size_t j = i + 1; j < n; ++j) idx[j] = idx[i];
        break;
      }
      if (i == 0) return;
    }
  }
}

}  // namespace

std::optional<controller> synthesize_candidate(
    const discrete_plant& plant, const safety_spec& spec,
    const counterexample_set& cex, const spectral_constraint& constraint,
    const synth_options& opts) {
  if (opts.budget <= 0) throw validation_error("search budget must be > 0");
  if (plant.m() != 1)
    throw validation_error("gain synthesis requires a single input");

  search_state st{plant,
                  spec,
                  cex,
                  constraint,
                  opts,
                  compute_gain_bounds(spec),
                  screen_model(plant, spec, opts),
                  max_init_magnitude(spec),
                  min_safe_magnitude(spec),
                  opts.budget};

  const std::size_t n = plant.n();
  std::vector<raw_vec> seeds;
  seeds.emplace_back(n, 0);  // K = 0 always first

  std::vector<std::vector<double>> grids;
  pole_grids(n, grids);
  std::set<raw_vec> seen;
  seen.insert(seeds.front());
  for (const auto& poles : grids) {
    auto k = place_poles(plant, poles);
    if (!k) continue;
    raw_vec raws = nearest_raws(*k, opts.controller_fmt);
    if (seen.insert(raws).second) seeds.push_back(std::move(raws));
  }

  for (const auto& seed : seeds) {
    raw_vec found;
    if (hill_climb(st, seed, found))
      return make_controller(found, opts.controller_fmt);
    if (st.evaluations_left <= 0) break;
  }
  return std::nullopt;
}

}  // namespace ctrlsynth
