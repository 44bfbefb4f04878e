// Structured per-iteration records emitted by the CEGIS loops, plus the
// shared result shape both back-ends hand to the report generator.

#ifndef CTRLSYNTH_RUNLOG_HPP
#define CTRLSYNTH_RUNLOG_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ctrlsynth/fixedpoint.hpp"
#include "ctrlsynth/model.hpp"

namespace ctrlsynth {

struct run_record {
  int iteration = 0;
  std::string phase;      // synthesize | safety | precision | complete |
                          // tube | confirm | refine
  std::string precision;  // plant format in effect, "<I,F>"
  std::string outcome;
  std::optional<Eigen::VectorXd> candidate;
  std::optional<int> cex_iteration;  // 1-based violating iteration
  std::optional<Eigen::VectorXd> cex_x0;
};

struct run_log {
  std::vector<run_record> records;
  void add(run_record r) { records.push_back(std::move(r)); }
};

enum class failure_kind {
  unsat,                   // search exhausted (single-precision back-end)
  unsat_at_max_precision,  // schedule exhausted
  timeout,
  k_bar_explosion,       // completeness depth beyond the configured cap
  refinement_exhausted,  // persistent spurious suspects at the doubling cap
  infeasible             // no spectral radius satisfies the flagged decays
};

std::string to_string(failure_kind f);

struct backend_result {
  std::optional<controller> ctrl;
  fixed_format plant_fmt;  // plant precision in effect at the end
  int k_used = 0;          // final unfolding depth or tube horizon
  int iterations = 0;      // CEGIS iterations consumed
  std::optional<failure_kind> failure;
  run_log log;

  bool ok() const { return ctrl.has_value(); }
};

}  // namespace ctrlsynth

#endif
