// Candidate gain search.  Both verification back-ends feed recorded
// counterexamples into a deterministic, solver-free search over the integer
// lattice of raw gain words: seeds are K = 0 and pole-placement targets on a
// coarse stable-pole grid, refined by best-improvement coordinate moves of
// +-2^j raw units.  A candidate is returned only when an independent
// validator confirms representability, the exact-rational stability margin,
// the input-budget bound, a disturbance-inflated hull screen of the state
// and input trajectories, and every recorded counterexample check.  The
// screen keeps the search away from candidates whose reachable hull grazes
// the bounds, which the verification stages would reject without feedback.

#ifndef CTRLSYNTH_SYNTH_HPP
#define CTRLSYNTH_SYNTH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ctrlsynth/fixedpoint.hpp"
#include "ctrlsynth/model.hpp"
#include "ctrlsynth/noise.hpp"

namespace ctrlsynth {

struct counterexample {
  // trajectory: every state and input along k simulated steps must stay in
  // bounds (multi-stage back-end).  at_iteration: the reachable interval at
  // 1-based iteration k must lie in the safe box (reach-tube back-end).
  enum class kind { trajectory, at_iteration };

  kind check = kind::trajectory;
  int k = 1;
  Eigen::VectorXd x0;

  bool operator==(const counterexample& other) const;
};

struct counterexample_set {
  std::vector<counterexample> entries;

  // rejects x0 outside the given initial box; returns false on exact duplicate
  bool add(const counterexample& c, const box& init_box);
  void clear() { entries.clear(); }
  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// input-budget constraint: sum_i |K_i| * w_i <= u_mag, with w_i the largest
// initial-state magnitude per coordinate and u_mag the larger input bound
struct gain_bounds {
  std::vector<double> weights;
  double input_mag = 0.0;

  bool admits(const Eigen::VectorXd& gains) const;
  // admissible magnitude for one gain entry when all others are zero;
  // +infinity when the coordinate's weight is zero
  double entry_limit(std::size_t i) const;
};

gain_bounds compute_gain_bounds(const safety_spec& spec);

// largest initial-state magnitude over all coordinates
double max_init_magnitude(const safety_spec& spec);
// smallest safe-box magnitude over all coordinates and both bounds
double min_safe_magnitude(const safety_spec& spec);

// spectral requirements accumulated by tube refinement: a radius cap plus
// iterations at which the geometric decay rho^k r0 + rN/(1-rho) must clear
// the smallest safe radius
struct spectral_constraint {
  double rho_max = 1.0;
  std::vector<int> flagged_iterations;

  bool admits(double rho, double r0, double r_noise, double r_safe) const;
};

struct synth_options {
  fixed_format controller_fmt;
  fixed_format plant_fmt;
  std::optional<fixed_format> dac_fmt;
  int budget = 20000;  // candidate evaluations
  std::uint64_t seed = 0;
  // gains rejected outright (raw-word equality), e.g. after a repeated-root
  // failure downstream
  std::vector<Eigen::VectorXd> tabu;
  // disturbance model assumed by the margin screen: per-row radii derived
  // from the plant word (multi-stage replay) or, when set, the candidate's
  // uniform per-coordinate noise radius (reach-tube model)
  bool uniform_noise = false;
};

// full candidate predicate, usable as an independent validator: exact
// representability, exact-rational stability margin with the flagged-decay
// checks, input budget, and all counterexample replays
bool candidate_admissible(const discrete_plant& plant, const safety_spec& spec,
                          const counterexample_set& cex,
                          const spectral_constraint& constraint,
                          const synth_options& opts, const controller& ctrl);

// deterministic search; empty optional means the budget or the seed/move
// schedule was exhausted without an admissible candidate
std::optional<controller> synthesize_candidate(
    const discrete_plant& plant, const safety_spec& spec,
    const counterexample_set& cex, const spectral_constraint& constraint,
    const synth_options& opts);

// per-coordinate reachable interval at 1-based iteration `iter` from the
// point x0 under ideal closed-loop dynamics and per-coordinate disturbances
// bounded by r_noise each step (the reach-tube back-end's concrete model)
box point_reach_box(const Eigen::MatrixXd& a_cl, const Eigen::VectorXd& x0,
                    int iter, double r_noise);

}  // namespace ctrlsynth

#endif
