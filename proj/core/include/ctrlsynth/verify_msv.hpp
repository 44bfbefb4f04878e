// Multi-staged verification back-end.  The safety stage simulates every
// vertex of the initial box at word level; the precision stage replays the
// unfolding in interval arithmetic with certified matrix and disturbance
// enclosures so plant-precision effects cannot be missed; the completeness
// stage bounds the unfolding depth beyond which a stable loop cannot fail.
// An outer loop escalates the plant precision schedule when synthesis or the
// precision stage cannot succeed at the current word length.

#ifndef CTRLSYNTH_VERIFY_MSV_HPP
#define CTRLSYNTH_VERIFY_MSV_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ctrlsynth/model.hpp"
#include "ctrlsynth/runlog.hpp"
#include "ctrlsynth/stability.hpp"

namespace ctrlsynth {

struct safety_counterexample {
  enum class cause { state_bounds, input_bounds, overflow };

  Eigen::VectorXd x0;          // the violating initial vertex
  int violation_iteration = 1;  // 1-based; 2 is the first successor state
  cause why = cause::state_bounds;
  std::size_t coordinate = 0;  // violated state coordinate (state_bounds)
};

// simulates k steps from each of the 2^n initial vertices with the
// deterministic sign adversary; the input bounds are asserted, not
// saturating, and overflow counts as a violation.  Empty optional is PASS;
// the first failing vertex in lexicographic order is returned.
std::optional<safety_counterexample> verify_safety(
    const discrete_plant& plant, const controller& ctrl,
    const safety_spec& spec, int k, fixed_format plant_fmt,
    std::optional<fixed_format> dac_fmt = {});

struct precision_result {
  bool passed = true;
  int violation_iteration = 0;     // 1-based iteration of the first failure
  std::ptrdiff_t coordinate = -1;  // violated coordinate; -1 is the input
};

// interval replay of the k-step unfolding from the whole initial box,
// propagated in power form (matrix-power times initial box plus accumulated
// disturbances) to avoid wrapping.  The matrix enclosure carries only the
// certified discretization radii; word representation of the plant numbers,
// ADC sampling, gain-product truncation, DAC and plant requantization of the
// input, plant-side sampling, and the row-product truncations all enter the
// per-step disturbance, bounded against the certified state and input boxes.
// The applied-input check runs in its own power form so the gain row is
// composed with the matrix powers, not with the hulled state box.
precision_result verify_precision(const discrete_plant& plant,
                                  const controller& ctrl,
                                  const safety_spec& spec, int k,
                                  fixed_format plant_fmt,
                                  std::optional<fixed_format> dac_fmt = {});

struct completeness_result {
  bool passed = true;
  completeness_threshold bound;  // adopt bound.k_bar when not passed
};

// PASS iff k already reaches the certified completeness depth for the
// closed loop and the spec's safe-box aspect ratio
completeness_result verify_complete(const discrete_plant& plant,
                                    const controller& ctrl,
                                    const safety_spec& spec, int k);

struct msv_options {
  fixed_format controller_fmt{8, 8};
  std::vector<fixed_format> schedule{{13, 3}, {17, 7}, {21, 11}, {25, 15}};
  std::optional<fixed_format> dac_fmt;  // defaults to the controller format
  int synth_budget = 20000;
  int k_bar_cap = 4096;
  double time_budget_s = 120.0;
  std::uint64_t seed = 0;
};

// synthesize -> safety -> precision -> complete with counterexample
// feedback; advances the precision schedule (clearing counterexamples) when
// synthesis is exhausted or the precision stage cannot certify the loop
backend_result msv_cegis(const discrete_plant& plant, const safety_spec& spec,
                         const msv_options& opts);

}  // namespace ctrlsynth

#endif
