// Orchestration shared by the command-line front end: the discretization
// sweep over candidate sample times, single-controller verification paths
// for both back-ends, the word-level simulation oracle that cross-checks
// every accepted controller, and report rendering.

#ifndef CTRLSYNTH_RUNNER_HPP
#define CTRLSYNTH_RUNNER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctrlsynth/benchmark_io.hpp"
#include "ctrlsynth/noise.hpp"
#include "ctrlsynth/runlog.hpp"
#include "ctrlsynth/synth.hpp"

namespace ctrlsynth {

struct run_options {
  std::string backend = "both";  // msv | aa | both
  std::uint64_t seed = 0;
  double time_budget_s = 120.0;
  int k_star = 0;  // 0 keeps the reach-tube default horizon
  // overrides both the instance schedule and the built-in default when set
  std::vector<fixed_format> schedule;
  bool noise_through_input = false;
  int oracle_seeds = 100;  // 0 skips the simulation oracle
};

struct run_row {
  std::string benchmark;
  std::string backend;
  double t_s = 0.0;
  int order = 0;
  std::string precision;  // plant word in effect at the end, "<I,F>"
  std::optional<Eigen::VectorXd> gains;
  int k_used = 0;
  int iterations = 0;
  double wall_s = 0.0;
  std::string outcome;  // "ok" or the failure diagnosis
  std::string oracle;   // "safe", a violation description, or "-"
  bool ok = false;      // synthesized and the oracle found no violation
};

struct report {
  std::vector<run_row> rows;

  // every backend attempted on every benchmark reached a verified controller
  bool all_ok() const;
};

// discrete instances wrap their matrices exactly; continuous ones run the
// certified discretization
discrete_plant make_discrete(const benchmark_instance& inst, double t_s);

// simulation horizon for oracle checks: ten times the completeness depth,
// capped at 2000 steps (32 when the depth is unavailable)
int oracle_steps(const discrete_plant& plant, const controller& ctrl,
                 const safety_spec& spec);

// word-level sampled-noise simulation from every initial-box vertex under
// `seeds` distinct noise seeds; returns "safe" or a violation description
std::string oracle_verdict(const discrete_plant& plant, const controller& ctrl,
                           const safety_spec& spec, fixed_format plant_fmt,
                           std::optional<fixed_format> dac_fmt, int steps,
                           int seeds, std::uint64_t seed);

// per backend, walks the sample times in ascending order and stops at the
// first verified controller; every attempt becomes a report row
report run_benchmark(const benchmark_instance& inst, const run_options& opts);

struct verify_result {
  std::string verdict;  // safe | unsafe | inconclusive
  std::string detail;
  std::optional<counterexample> cex;

  bool safe() const { return verdict == "safe"; }
};

// checks a caller-supplied gain vector against one instance; gains must be
// exactly representable at the instance's controller format
verify_result verify_gains(const benchmark_instance& inst, double t_s,
                           const Eigen::VectorXd& gains,
                           const std::string& backend,
                           const run_options& opts);

// deterministic worst-case-sign trace from the all-high initial vertex
trace simulate_gains(const benchmark_instance& inst, double t_s,
                     const Eigen::VectorXd& gains, int steps);

std::string report_text(const report& rep);
std::string report_jsonl(const report& rep);

// temp-file-and-rename write, matching the benchmark save discipline
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace ctrlsynth

#endif
