#include "ctrlsynth/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ctrlsynth/errors.hpp"
#include "ctrlsynth/stability.hpp"
#include "ctrlsynth/verify_aa.hpp"
#include "ctrlsynth/verify_msv.hpp"

namespace ctrlsynth {

namespace {

using nlohmann::ordered_json;

double safe_box_ratio(const safety_spec& spec) {
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = 0.0;
  for (const auto& d : spec.state_box.dims) {
    r_min = std::min(r_min, std::min(std::abs(d.lo), std::abs(d.hi)));
    r_max = std::max(r_max, std::max(std::abs(d.lo), std::abs(d.hi)));
  }
  return r_max > 0.0 ? r_min / r_max : 1.0;
}

fixed_format finest_plant_format(const benchmark_instance& inst,
                                 const run_options& opts) {
  if (!opts.schedule.empty()) return opts.schedule.back();
  if (!inst.plant_schedule.empty()) return inst.plant_schedule.back();
  return fixed_format(25, 15);
}

std::string gains_string(const Eigen::VectorXd& k) {
  std::ostringstream out;
  out << "[";
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    if (i) out << " ";
    out << std::setprecision(9) << k[i];
  }
  out << "]";
  return out.str();
}

std::vector<std::string> backend_list(const std::string& backend) {
  if (backend == "msv") return {"msv"};
  if (backend == "aa") return {"aa"};
  if (backend == "both") return {"msv", "aa"};
  throw validation_error("backend must be msv, aa or both");
}

}  // namespace

bool report::all_ok() const {
  if (rows.empty()) return true;
  std::vector<std::string> groups;
  for (const auto& r : rows) {
    const std::string g = r.benchmark + "\n" + r.backend;
    if (std::find(groups.begin(), groups.end(), g) == groups.end())
      groups.push_back(g);
  }
  for (const auto& g : groups) {
    bool ok = false;
    for (const auto& r : rows)
      if (r.benchmark + "\n" + r.backend == g && r.ok) ok = true;
    if (!ok) return false;
  }
  return true;
}

discrete_plant make_discrete(const benchmark_instance& inst, double t_s) {
  if (inst.discrete) return discrete_plant(inst.A, inst.B, t_s);
  return discretize(continuous_plant(inst.A, inst.B), t_s);
}

int oracle_steps(const discrete_plant& plant, const controller& ctrl,
                 const safety_spec& spec) {
  int depth = 32;
  try {
    depth = completeness_bound(closed_loop_matrix(plant, ctrl), plant.T_s,
                               safe_box_ratio(spec))
                .k_bar;
  } catch (const error&) {
    // unstable or defective loops keep the fallback horizon
  }
  return std::min(10 * std::max(depth, 1), 2000);
}

std::string oracle_verdict(const discrete_plant& plant, const controller& ctrl,
                           const safety_spec& spec, fixed_format plant_fmt,
                           std::optional<fixed_format> dac_fmt, int steps,
                           int seeds, std::uint64_t seed) {
  if (seeds <= 0) return "-";
  const noise_model nm = build_noise_model(
      ctrl.format(), dac_fmt.value_or(ctrl.format()), ctrl);
  const auto corners = vertices(spec.init_box);
  for (std::size_t v = 0; v < corners.size(); ++v) {
    for (int s = 0; s < seeds; ++s) {
      trace tr;
      try {
        tr = simulate(plant, ctrl, corners[v], steps,
                      noise_policy::sampled, spec, plant_fmt, nm,
                      seed + static_cast<std::uint64_t>(s), dac_fmt);
      } catch (const fixed_overflow&) {
        return "overflow from vertex " + std::to_string(v) + ", seed " +
               std::to_string(seed + static_cast<std::uint64_t>(s));
      }
      for (const auto& e : tr.entries)
        if (!spec.state_box.contains(e.x))
          return "violation at k=" + std::to_string(e.k) + " from vertex " +
                 std::to_string(v) + ", seed " +
                 std::to_string(seed + static_cast<std::uint64_t>(s));
    }
  }
  return "safe";
}

report run_benchmark(const benchmark_instance& inst, const run_options& opts) {
  report rep;
  std::vector<double> sweep = inst.sample_times;
  std::sort(sweep.begin(), sweep.end());

  for (const std::string& backend : backend_list(opts.backend)) {
    for (const double t_s : sweep) {
      run_row row;
      row.benchmark = inst.name;
      row.backend = backend;
      row.t_s = t_s;
      row.order = static_cast<int>(inst.n());
      const auto t0 = std::chrono::steady_clock::now();

      discrete_plant plant;
      try {
        plant = make_discrete(inst, t_s);
      } catch (const error& e) {
        row.outcome = std::string("discretization failed: ") + e.what();
        row.oracle = "-";
        rep.rows.push_back(std::move(row));
        continue;
      }

      backend_result res;
      fixed_format oracle_fmt = finest_plant_format(inst, opts);
      if (backend == "msv") {
        msv_options mo;
        mo.controller_fmt = inst.controller_fmt;
        mo.dac_fmt = inst.dac_fmt;
        if (!opts.schedule.empty())
          mo.schedule = opts.schedule;
        else if (!inst.plant_schedule.empty())
          mo.schedule = inst.plant_schedule;
        mo.time_budget_s = opts.time_budget_s;
        mo.seed = opts.seed;
        res = msv_cegis(plant, inst.spec, mo);
        oracle_fmt = res.plant_fmt;
      } else {
        aa_options ao;
        ao.controller_fmt = inst.controller_fmt;
        ao.dac_fmt = inst.dac_fmt;
        ao.k_star = opts.k_star;
        ao.time_budget_s = opts.time_budget_s;
        ao.seed = opts.seed;
        ao.tube.noise_through_input = opts.noise_through_input;
        res = aa_cegis(plant, inst.spec, ao);
      }

      row.wall_s = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
      row.precision = res.plant_fmt.str();
      row.k_used = res.k_used;
      row.iterations = res.iterations;
      if (res.ok()) {
        row.gains = res.ctrl->gains();
        row.outcome = "ok";
        row.oracle = oracle_verdict(plant, *res.ctrl, inst.spec, oracle_fmt,
                                    inst.dac_fmt,
                                    oracle_steps(plant, *res.ctrl, inst.spec),
                                    opts.oracle_seeds, opts.seed);
        row.ok = opts.oracle_seeds <= 0 || row.oracle == "safe";
      } else {
        row.outcome = to_string(*res.failure);
        row.oracle = "-";
      }
      const bool done = row.ok;
      rep.rows.push_back(std::move(row));
      if (done) break;  // smallest workable sample time wins
    }
  }
  return rep;
}

namespace {

verify_result verify_aa_gains(const benchmark_instance& inst,
                              const discrete_plant& plant,
                              const controller& ctrl,
                              const run_options& opts) {
  verify_result out;
  const noise_model nm = build_noise_model(
      inst.controller_fmt, inst.dac_fmt.value_or(inst.controller_fmt), ctrl);

  int k_star = opts.k_star;
  if (k_star <= 0) {
    int k_bar = 32;
    try {
      k_bar = completeness_bound(closed_loop_matrix(plant, ctrl), plant.T_s,
                                 safe_box_ratio(inst.spec))
                  .k_bar;
    } catch (const error&) {
    }
    k_star = std::max(2 * k_bar, 32);
  }
  k_star = std::min(k_star, 8192);

  tube_options topts;
  topts.noise_through_input = opts.noise_through_input;
  for (int refines = 0; refines <= 4; ++refines) {
    reach_tube tube;
    try {
      tube = compute_reach_tube(plant, ctrl, inst.spec, nm, k_star, topts);
    } catch (const no_contraction_certificate& e) {
      out.verdict = "inconclusive";
      out.detail = e.what();
      return out;
    }
    const auto chk = check_tube(tube, inst.spec);
    if (chk.passed) {
      out.verdict = "safe";
      out.detail = "reach tube contained up to horizon " +
                   std::to_string(k_star) + " and beyond";
      return out;
    }
    const auto conf = confirm_or_refine(chk.suspect, tube, plant, ctrl,
                                        inst.spec);
    if (conf.real) {
      out.verdict = "unsafe";
      out.detail = "counterexample at iteration " + std::to_string(conf.cex.k) +
                   " from " + gains_string(conf.cex.x0);
      out.cex = conf.cex;
      return out;
    }
    if (k_star >= 8192) break;
    k_star = std::min(2 * k_star, 8192);
  }
  out.verdict = "inconclusive";
  out.detail = "suspects stayed spurious through the horizon refinements";
  return out;
}

verify_result verify_msv_gains(const benchmark_instance& inst,
                               const discrete_plant& plant,
                               const controller& ctrl,
                               const run_options& opts) {
  verify_result out;
  std::vector<fixed_format> schedule = opts.schedule;
  if (schedule.empty()) schedule = inst.plant_schedule;
  if (schedule.empty()) schedule = msv_options{}.schedule;

  for (const fixed_format plant_fmt : schedule) {
    int k = static_cast<int>(2 * plant.n());
    while (true) {
      const auto sres =
          verify_safety(plant, ctrl, inst.spec, k, plant_fmt, inst.dac_fmt);
      if (sres) {
        out.verdict = "unsafe";
        out.detail = "trajectory violation at iteration " +
                     std::to_string(sres->violation_iteration) + " from " +
                     gains_string(sres->x0);
        counterexample c;
        c.check = counterexample::kind::trajectory;
        c.k = k;
        c.x0 = sres->x0;
        out.cex = c;
        return out;
      }
      const auto pres =
          verify_precision(plant, ctrl, inst.spec, k, plant_fmt, inst.dac_fmt);
      if (!pres.passed) break;  // escalate the plant word

      completeness_result comp;
      try {
        comp = verify_complete(plant, ctrl, inst.spec, k);
      } catch (const repeated_eigenvalues& e) {
        out.verdict = "inconclusive";
        out.detail = e.what();
        return out;
      }
      if (comp.bound.k_bar > 4096) {
        out.verdict = "inconclusive";
        out.detail = "completeness depth " + std::to_string(comp.bound.k_bar) +
                     " beyond the cap";
        return out;
      }
      if (!comp.passed) {
        k = comp.bound.k_bar;
        continue;
      }
      out.verdict = "safe";
      out.detail = "all stages passed at depth " + std::to_string(k) +
                   ", plant word " + plant_fmt.str();
      return out;
    }
  }
  out.verdict = "inconclusive";
  out.detail = "interval replay stayed imprecise at every scheduled word";
  return out;
}

}  // namespace

verify_result verify_gains(const benchmark_instance& inst, double t_s,
                           const Eigen::VectorXd& gains,
                           const std::string& backend,
                           const run_options& opts) {
  const discrete_plant plant = make_discrete(inst, t_s);
  const controller ctrl = controller::from_doubles(gains, inst.controller_fmt);

  if (!jury_check(char_poly::of(closed_loop_rational(plant, ctrl)))) {
    verify_result out;
    out.verdict = "unsafe";
    out.detail = "closed loop is not strictly stable";
    return out;
  }

  std::vector<verify_result> parts;
  for (const std::string& b : backend_list(backend))
    parts.push_back(b == "aa" ? verify_aa_gains(inst, plant, ctrl, opts)
                              : verify_msv_gains(inst, plant, ctrl, opts));
  if (parts.size() == 1) return parts.front();

  verify_result combined;
  combined.verdict = "safe";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!combined.detail.empty()) combined.detail += "; ";
    combined.detail +=
        backend_list(backend)[i] + ": " + parts[i].verdict;
    if (parts[i].verdict == "unsafe" && combined.verdict != "unsafe") {
      combined.verdict = "unsafe";
      combined.cex = parts[i].cex;
    } else if (parts[i].verdict == "inconclusive" &&
               combined.verdict == "safe") {
      combined.verdict = "inconclusive";
    }
  }
  return combined;
}

trace simulate_gains(const benchmark_instance& inst, double t_s,
                     const Eigen::VectorXd& gains, int steps) {
  const discrete_plant plant = make_discrete(inst, t_s);
  const controller ctrl = controller::from_doubles(gains, inst.controller_fmt);
  const noise_model nm = build_noise_model(
      inst.controller_fmt, inst.dac_fmt.value_or(inst.controller_fmt), ctrl);
  if (steps <= 0)
    steps = std::min(oracle_steps(plant, ctrl, inst.spec), 1000);
  const run_options defaults;
  const fixed_format plant_fmt = finest_plant_format(inst, defaults);
  const Eigen::VectorXd x0 = vertices(inst.spec.init_box).back();
  return simulate(plant, ctrl, x0, steps, noise_policy::worst_case_sign,
                  inst.spec, plant_fmt, nm, 0, inst.dac_fmt);
}

std::string report_text(const report& rep) {
  const std::vector<std::string> header = {
      "benchmark", "backend", "T_s",     "order",   "precision", "K",
      "k_used",    "iters",   "time[s]", "outcome", "oracle"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(header);
  for (const auto& r : rep.rows) {
    std::ostringstream ts, wall;
    ts << r.t_s;
    wall << std::fixed << std::setprecision(2) << r.wall_s;
    cells.push_back({r.benchmark, r.backend, ts.str(),
                     std::to_string(r.order), r.precision,
                     r.gains ? gains_string(*r.gains) : "-",
                     std::to_string(r.k_used), std::to_string(r.iterations),
                     wall.str(), r.outcome, r.oracle});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      out << (c + 1 < row.size() ? "  " : "");
    }
    out << "\n";
  }
  return out.str();
}

std::string report_jsonl(const report& rep) {
  std::ostringstream out;
  for (const auto& r : rep.rows) {
    ordered_json j;
    j["benchmark"] = r.benchmark;
    j["backend"] = r.backend;
    j["t_s"] = r.t_s;
    j["order"] = r.order;
    j["precision"] = r.precision;
    if (r.gains) {
      ordered_json k = ordered_json::array();
      for (Eigen::Index i = 0; i < r.gains->size(); ++i)
        k.push_back((*r.gains)[i]);
      j["gains"] = std::move(k);
    } else {
      j["gains"] = nullptr;
    }
    j["k_used"] = r.k_used;
    j["iterations"] = r.iterations;
    j["wall_s"] = r.wall_s;
    j["outcome"] = r.outcome;
    j["oracle"] = r.oracle;
    j["ok"] = r.ok;
    out << j.dump() << "\n";
  }
  return out.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace ctrlsynth
