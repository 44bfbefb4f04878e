// Command-line front end: synthesis sweeps, single-controller verification,
// trace emission, and directory batches.  Exit codes: 0 all runs succeeded,
// 1 any verification failure or back-end FAILURE, 2 usage or input errors.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "ctrlsynth/benchmark_io.hpp"
#include "ctrlsynth/errors.hpp"
#include "ctrlsynth/noise.hpp"
#include "ctrlsynth/runner.hpp"

namespace {

struct cli_state {
  std::string path;
  std::string backend = "both";
  std::uint64_t seed = 0;
  double time_budget = 120.0;
  int k_star = 0;
  std::string schedule;
  std::string report_out;
  std::string trace_out;
  std::vector<double> gains;
  int steps = 0;
  bool noise_through_input = false;
};

std::vector<ctrlsynth::fixed_format> parse_schedule(const std::string& text) {
  std::vector<ctrlsynth::fixed_format> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
      throw ctrlsynth::parse_error(
          "precision schedule entries are I:F pairs separated by commas");
    try {
      out.push_back(ctrlsynth::fixed_format(std::stoi(item.substr(0, colon)),
                                            std::stoi(item.substr(colon + 1))));
    } catch (const std::exception&) {
      throw ctrlsynth::parse_error("cannot parse schedule entry '" + item +
                                   "'");
    }
  }
  if (out.empty())
    throw ctrlsynth::parse_error("precision schedule must not be empty");
  return out;
}

ctrlsynth::run_options make_run_options(const cli_state& st) {
  ctrlsynth::run_options opts;
  opts.backend = st.backend;
  opts.seed = st.seed;
  opts.time_budget_s = st.time_budget;
  opts.k_star = st.k_star;
  if (!st.schedule.empty()) opts.schedule = parse_schedule(st.schedule);
  opts.noise_through_input = st.noise_through_input;
  return opts;
}

Eigen::VectorXd gain_vector(const std::vector<double>& g) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = g[i];
  return v;
}

double first_sample_time(const ctrlsynth::benchmark_instance& inst) {
  return *std::min_element(inst.sample_times.begin(),
                           inst.sample_times.end());
}

void emit_report(const ctrlsynth::report& rep, const std::string& report_out) {
  std::cout << ctrlsynth::report_text(rep);
  if (!report_out.empty())
    ctrlsynth::write_text_atomic(report_out, ctrlsynth::report_jsonl(rep));
}

int run_synth(const cli_state& st) {
  const auto inst = ctrlsynth::load_benchmark(st.path);
  const auto opts = make_run_options(st);
  const auto rep = ctrlsynth::run_benchmark(inst, opts);
  emit_report(rep, st.report_out);
  if (!st.trace_out.empty()) {
    for (const auto& row : rep.rows) {
      if (!row.ok || !row.gains) continue;
      const auto tr =
          ctrlsynth::simulate_gains(inst, row.t_s, *row.gains, st.steps);
      std::ostringstream csv;
      ctrlsynth::write_csv(tr, csv);
      ctrlsynth::write_text_atomic(st.trace_out, csv.str());
      break;
    }
  }
  return rep.all_ok() ? 0 : 1;
}

int run_verify(const cli_state& st) {
  const auto inst = ctrlsynth::load_benchmark(st.path);
  const auto opts = make_run_options(st);
  const auto vr = ctrlsynth::verify_gains(inst, first_sample_time(inst),
                                          gain_vector(st.gains), st.backend,
                                          opts);
  std::cout << vr.verdict << ": " << vr.detail << "\n";
  return vr.safe() ? 0 : 1;
}

int run_simulate(const cli_state& st) {
  const auto inst = ctrlsynth::load_benchmark(st.path);
  const auto tr = ctrlsynth::simulate_gains(inst, first_sample_time(inst),
                                            gain_vector(st.gains), st.steps);
  if (st.trace_out.empty()) {
    ctrlsynth::write_csv(tr, std::cout);
  } else {
    std::ostringstream csv;
    ctrlsynth::write_csv(tr, csv);
    ctrlsynth::write_text_atomic(st.trace_out, csv.str());
  }
  return 0;
}

int run_bench(const cli_state& st) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(st.path))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ctrlsynth::validation_error("no .json instances in " + st.path);

  const auto opts = make_run_options(st);
  ctrlsynth::report combined;
  for (const auto& file : files) {
    try {
      const auto inst = ctrlsynth::load_benchmark(file);
      const auto rep = ctrlsynth::run_benchmark(inst, opts);
      combined.rows.insert(combined.rows.end(), rep.rows.begin(),
                           rep.rows.end());
    } catch (const ctrlsynth::error& e) {
      ctrlsynth::run_row row;
      row.benchmark = std::filesystem::path(file).stem().string();
      row.backend = st.backend;
      row.outcome = e.what();
      row.oracle = "-";
      combined.rows.push_back(std::move(row));
    }
  }
  emit_report(combined, st.report_out);
  return combined.all_ok() ? 0 : 1;
}

void add_common_flags(CLI::App* cmd, cli_state& st) {
  cmd->add_option("--backend", st.backend,
                  "verification back-end: msv, aa or both");
  cmd->add_option("--seed", st.seed, "root seed for search and oracle noise");
  cmd->add_option("--time-budget", st.time_budget,
                  "per-run wall-clock budget in seconds");
  cmd->add_option("--k-star", st.k_star,
                  "fixed reach-tube horizon (0 = derive from the depth bound)");
  cmd->add_option("--precision-schedule", st.schedule,
                  "plant word escalation, e.g. 13:3,17:7,21:11,25:15");
  cmd->add_flag("--noise-through-input", st.noise_through_input,
                "scale the tube disturbance by the input column");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "state-feedback gain synthesis and verification for fixed-point "
      "closed loops"};
  app.require_subcommand(1);
  cli_state st;

  auto* synth =
      app.add_subcommand("synth", "synthesize a controller for one instance");
  synth->add_option("instance", st.path, "instance file")
      ->required()
      ->check(CLI::ExistingFile);
  add_common_flags(synth, st);
  synth->add_option("--report-out", st.report_out, "JSON-lines report path");
  synth->add_option("--trace-out", st.trace_out,
                    "CSV trace of the accepted controller");
  synth->add_option("--steps", st.steps, "trace length (0 = derive)");

  auto* verify = app.add_subcommand(
      "verify", "check a provided gain vector against one instance");
  verify->add_option("instance", st.path, "instance file")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--gains", st.gains, "gain vector, comma separated")
      ->required()
      ->delimiter(',');
  add_common_flags(verify, st);

  auto* simulate =
      app.add_subcommand("simulate", "emit a worst-case-sign trace as CSV");
  simulate->add_option("instance", st.path, "instance file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--gains", st.gains, "gain vector, comma separated")
      ->required()
      ->delimiter(',');
  simulate->add_option("--steps", st.steps, "trace length (0 = derive)");
  simulate->add_option("--trace-out", st.trace_out,
                       "CSV path (stdout when omitted)");

  auto* bench = app.add_subcommand(
      "bench", "run every instance in a directory and aggregate the report");
  bench->add_option("directory", st.path, "directory of instance files")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common_flags(bench, st);
  bench->add_option("--report-out", st.report_out, "JSON-lines report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(st);
    if (verify->parsed()) return run_verify(st);
    if (simulate->parsed()) return run_simulate(st);
    return run_bench(st);
  } catch (const ctrlsynth::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ctrlsynth::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
