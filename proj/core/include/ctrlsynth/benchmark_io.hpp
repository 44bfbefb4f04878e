// JSON problem instances: dynamics, sampling sweep, bound boxes and word
// formats, with defaults applied at load time and atomic round-trip saves.

#ifndef CTRLSYNTH_BENCHMARK_IO_HPP
#define CTRLSYNTH_BENCHMARK_IO_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ctrlsynth/fixedpoint.hpp"
#include "ctrlsynth/model.hpp"

namespace ctrlsynth {

struct benchmark_instance {
  std::string name;
  bool discrete = false;  // A, B already describe the sampled dynamics
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  // candidate sample times for the discretization sweep; a single nominal
  // step for discrete instances
  std::vector<double> sample_times;
  safety_spec spec;
  fixed_format controller_fmt{8, 8};
  // empty keeps the back-end's default escalation schedule
  std::vector<fixed_format> plant_schedule;
  std::optional<fixed_format> dac_fmt;
  // model matrices reconstructed from textbook families rather than taken
  // verbatim from a published artifact
  bool rederived = false;

  std::size_t n() const { return static_cast<std::size_t>(A.rows()); }
};

// throws parse_error naming the offending field, or validation_error when a
// well-formed file violates an instance invariant
benchmark_instance parse_benchmark(const std::string& text,
                                   const std::string& origin);
benchmark_instance load_benchmark(const std::string& path);

std::string serialize_benchmark(const benchmark_instance& inst);
// writes a sibling temp file and renames it into place, so a concurrent
// reader never sees a torn file
void save_benchmark(const benchmark_instance& inst, const std::string& path);

}  // namespace ctrlsynth

#endif
