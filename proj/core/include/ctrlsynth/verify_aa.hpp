// Reach-tube back-end.  The closed loop is enclosed by an interval matrix
// covering discretization and coefficient-rounding error; iterated in power
// form (A^k X0 plus an accumulated disturbance sum) it yields one box per
// iteration up to a horizon K*, and a certified geometric tail covers every
// later iteration.  A box leaving the safe region names a suspect vertex;
// replaying it concretely either confirms a counterexample (which tightens
// the spectral constraint fed back to synthesis) or widens the horizon.

#ifndef CTRLSYNTH_VERIFY_AA_HPP
#define CTRLSYNTH_VERIFY_AA_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ctrlsynth/interval.hpp"
#include "ctrlsynth/model.hpp"
#include "ctrlsynth/noise.hpp"
#include "ctrlsynth/runlog.hpp"
#include "ctrlsynth/synth.hpp"

namespace ctrlsynth {

struct tube_options {
  // route the per-step disturbance through the plant input column instead of
  // bounding every coordinate by the same radius
  bool noise_through_input = false;
  // largest matrix power tried when searching for a certified contraction
  int power_limit = 512;
};

struct reach_tube {
  // boxes[k-1] encloses every state reachable at 1-based iteration k;
  // iteration 1 is the initial box itself
  std::vector<box> boxes;
  // sound enclosure of every iteration beyond k_star
  box tail;
  int k_star = 0;

  // contraction certificate behind the tail: for some basis T,
  // ||T^-1 A^p T||_inf <= contraction_factor < 1 holds with outward rounding
  int contraction_power = 1;
  double contraction_factor = 0.0;
  // upper bound of ||T||_inf ||T^-1||_inf
  double conditioning = 1.0;

  // per-step disturbance model the tube was built with
  double noise_radius = 0.0;
  Eigen::VectorXd w_radius;
  bool noise_routed = false;

  // nominal closed-loop powers A^i (plain doubles, i = 0..k_star-1) and the
  // candidate gains, kept for suspect-vertex extraction
  std::vector<Eigen::MatrixXd> powers;
  Eigen::VectorXd gains;
};

// throws no_contraction_certificate when no tried basis certifies a
// contracting power within opts.power_limit
reach_tube compute_reach_tube(const discrete_plant& plant,
                              const controller& ctrl, const safety_spec& spec,
                              const noise_model& noise, int k_star,
                              const tube_options& opts = {});

struct tube_suspect {
  int k = 1;  // 1-based iteration; k_star + 1 when the tail box is flagged
  bool from_tail = false;
  std::size_t coordinate = 0;
  // initial-box vertex maximizing the flagged coordinate's overhang
  Eigen::VectorXd x0;
};

struct tube_check {
  bool passed = true;
  tube_suspect suspect;
};

// earliest iteration whose enclosure leaves the safe box; per-iteration boxes
// are scanned before the tail
tube_check check_tube(const reach_tube& tube, const safety_spec& spec);

struct confirm_result {
  bool real = false;
  counterexample cex;  // meaningful only when real
};

// replays the suspect vertex under the nominal closed loop with the tube's
// per-step disturbance model, scanning every iteration up to the suspect's
// (2 k_star + 1 for tail suspects) and keeping the earliest concrete
// violation
confirm_result confirm_or_refine(const tube_suspect& suspect,
                                 const reach_tube& tube,
                                 const discrete_plant& plant,
                                 const controller& ctrl,
                                 const safety_spec& spec);

// tightens the admissible decay rate: per confirmed counterexample, the
// largest rho with rho^k r0 + r_noise/(1 - rho) <= r_safe is bisected to
// 1e-4 and the cap becomes the minimum over these and the current one; the
// counterexample iterations are appended to the flagged set.  Throws
// infeasible_constraint when no rate works (disturbance alone overflows the
// safe radius).
spectral_constraint refine_spectrum(const std::vector<counterexample>& cexs,
                                    const spectral_constraint& current,
                                    double r0, double r_noise, double r_safe);

struct aa_options {
  fixed_format controller_fmt{8, 8};
  std::optional<fixed_format> dac_fmt;
  // 0 derives max(2 k_bar, 32) from the completeness bound of the candidate
  int k_star = 0;
  int refine_cap = 4;  // horizon doublings per candidate
  int synth_budget = 20000;
  double time_budget_s = 120.0;
  std::uint64_t seed = 0;
  tube_options tube;
};

backend_result aa_cegis(const discrete_plant& plant, const safety_spec& spec,
                        const aa_options& opts = {});

}  // namespace ctrlsynth

#endif
