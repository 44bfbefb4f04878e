// Quantization treated as bounded nondeterministic noise: the ADC quantum
// q1, the DAC quantum q2, the controller round-off budget q3, and their
// aggregate set N.  Also the concrete closed-loop simulator that mechanizes
// every truncation (ADC, gain products, DAC, plant arithmetic) and lets the
// caller inject extra disturbances inside the modeled bounds.

#ifndef CTRLSYNTH_NOISE_HPP
#define CTRLSYNTH_NOISE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ctrlsynth/fixedpoint.hpp"
#include "ctrlsynth/interval.hpp"
#include "ctrlsynth/model.hpp"

namespace ctrlsynth {

struct noise_model {
  double q1 = 0.0;  // ADC quantum, 2^-F_adc
  double q2 = 0.0;  // DAC quantum, 0 when the DAC resolves at least as fine
  double q3 = 0.0;  // controller round-off bound for u = -K x
  interval n_set;   // [-q1/2 - q2/2 - q3, +q1/2 + q2/2 + q3]
  std::size_t dim = 0;  // state dimension; the noise vector is ones(dim) * N

  double radius() const { return n_set.hi; }
};

// q1 = 2^-F_c, q2 = 2^-F_dac when the DAC is coarser than the controller
// (else 0), q3 = c_m (n + sum |K_i|) from the left-to-right dot product
noise_model build_noise_model(fixed_format fmt_c, fixed_format fmt_dac,
                              const controller& ctrl);

struct step_result {
  Eigen::VectorXd x_next;
  double u = 0.0;            // applied input, after saturation
  double u_unclamped = 0.0;  // controller output before saturation
  bool saturated = false;
};

// One closed-loop step with all word-level effects: the state is sampled at
// the controller format, u = -(K . x) accumulates left to right, nu1 is
// added, the result is clamped to the input bounds, passed through the DAC
// format (controller format unless overridden) plus nu2, and the plant
// update runs entirely at plant_fmt.  Throws fixed_overflow when any plant
// word overflows.
step_result noisy_step(const discrete_plant& plant, const controller& ctrl,
                       const Eigen::VectorXd& x, double nu1, double nu2,
                       const safety_spec& spec, fixed_format plant_fmt,
                       std::optional<fixed_format> dac_fmt = {});

enum class noise_policy { zero, worst_case_sign, sampled };

struct trace {
  struct entry {
    int k = 0;
    Eigen::VectorXd x;
    double u = 0.0;
    bool saturated = false;  // the computed input exceeded the bounds
  };
  std::vector<entry> entries;
};

// steps >= 1 noisy steps from x0; entry k holds x_k and the input computed
// from it (the final entry's input is never applied).  worst_case_sign
// chooses, per step, the disturbance signs maximizing the next state's
// infinity norm; sampled draws uniformly inside the bounds from the seed.
// Overflow is rethrown with the offending step index in the message.
trace simulate(const discrete_plant& plant, const controller& ctrl,
               const Eigen::VectorXd& x0, int steps, noise_policy policy,
               const safety_spec& spec, fixed_format plant_fmt,
               const noise_model& noise, std::uint64_t seed = 0,
               std::optional<fixed_format> dac_fmt = {});

// header "k,x1..xn,u", one row per entry, full double precision
void write_csv(const trace& tr, std::ostream& out);

}  // namespace ctrlsynth

#endif
