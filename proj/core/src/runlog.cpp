#include "ctrlsynth/runlog.hpp"

namespace ctrlsynth {

std::string to_string(failure_kind f) {
  switch (f) {
    case failure_kind::unsat:
      return "unsat";
    case failure_kind::unsat_at_max_precision:
      return "unsat_at_max_precision";
    case failure_kind::timeout:
      return "timeout";
    case failure_kind::k_bar_explosion:
      return "k_bar_explosion";
    case failure_kind::refinement_exhausted:
      return "refinement_exhausted";
    case failure_kind::infeasible:
      return "infeasible";
  }
  return "unknown";
}

}  // namespace ctrlsynth
