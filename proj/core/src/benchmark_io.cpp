#include "ctrlsynth/benchmark_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "ctrlsynth/errors.hpp"

namespace ctrlsynth {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail_parse(const std::string& origin,
                             const std::string& what) {
  throw parse_error(origin + ": " + what);
}

const ordered_json& require(const ordered_json& j, const char* key,
                            const std::string& origin) {
  const auto it = j.find(key);
  if (it == j.end())
    fail_parse(origin, std::string("missing field '") + key + "'");
  return *it;
}

double number_at(const ordered_json& j, const std::string& where,
                 const std::string& origin) {
  if (!j.is_number()) fail_parse(origin, where + " is not a number");
  return j.get<double>();
}

Eigen::MatrixXd parse_matrix(const ordered_json& j, const std::string& key,
                             const std::string& origin) {
  if (!j.is_array() || j.empty())
    fail_parse(origin, key + " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    const std::string where = key + " row " + std::to_string(r);
    if (!row.is_array() || row.empty())
      fail_parse(origin, where + " is not a non-empty array");
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows),
               static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      fail_parse(origin, where + " has " + std::to_string(row.size()) +
                             " entries, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number_at(row[c], where + " entry " + std::to_string(c), origin);
  }
  return m;
}

std::vector<double> parse_numbers(const ordered_json& j,
                                  const std::string& key,
                                  const std::string& origin) {
  if (!j.is_array() || j.empty())
    fail_parse(origin, key + " must be a non-empty array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(
        number_at(j[i], key + " entry " + std::to_string(i), origin));
  return out;
}

box parse_bounds(const ordered_json& j, const std::string& key, std::size_t n,
                 const std::string& origin) {
  if (!j.is_object()) fail_parse(origin, key + " must hold lo/hi arrays");
  const auto lo = parse_numbers(require(j, "lo", origin), key + ".lo", origin);
  const auto hi = parse_numbers(require(j, "hi", origin), key + ".hi", origin);
  if (lo.size() != n || hi.size() != n)
    fail_parse(origin, key + " must list " + std::to_string(n) +
                           " coordinates");
  box b;
  b.dims.reserve(n);
  for (std::size_t i = 0; i < n; ++i) b.dims.push_back(interval(lo[i], hi[i]));
  return b;
}

fixed_format parse_format(const ordered_json& j, const std::string& key,
                          const std::string& origin) {
  if (!j.is_object()) fail_parse(origin, key + " must hold I and F");
  const double i_bits = number_at(require(j, "I", origin), key + ".I", origin);
  const double f_bits = number_at(require(j, "F", origin), key + ".F", origin);
  return fixed_format(static_cast<int>(i_bits), static_cast<int>(f_bits));
}

box default_bounds(std::size_t n) {
  box b;
  b.dims.assign(n, interval(-1.0, 1.0));
  return b;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json bounds_json(const box& b) {
  ordered_json lo = ordered_json::array();
  ordered_json hi = ordered_json::array();
  for (const auto& d : b.dims) {
    lo.push_back(d.lo);
    hi.push_back(d.hi);
  }
  return ordered_json{{"lo", std::move(lo)}, {"hi", std::move(hi)}};
}

ordered_json format_json(fixed_format fmt) {
  return ordered_json{{"I", fmt.integer_bits}, {"F", fmt.fraction_bits}};
}

}  // namespace

benchmark_instance parse_benchmark(const std::string& text,
                                   const std::string& origin) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(origin + ": " + e.what());
  }
  if (!j.is_object()) fail_parse(origin, "top level must be an object");

  benchmark_instance inst;
  if (const auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) fail_parse(origin, "name must be a string");
    inst.name = it->get<std::string>();
  } else {
    inst.name = std::filesystem::path(origin).stem().string();
  }

  if (const auto it = j.find("mode"); it != j.end()) {
    if (!it->is_string()) fail_parse(origin, "mode must be a string");
    const std::string mode = it->get<std::string>();
    if (mode == "discrete")
      inst.discrete = true;
    else if (mode != "continuous")
      fail_parse(origin, "mode must be 'continuous' or 'discrete'");
  }

  inst.A = parse_matrix(require(j, "A", origin), "A", origin);
  inst.B = parse_matrix(require(j, "B", origin), "B", origin);
  if (inst.A.rows() != inst.A.cols())
    throw validation_error(origin + ": A must be square");
  if (inst.B.rows() != inst.A.rows() || inst.B.cols() != 1)
    throw validation_error(origin + ": B must be a single-input column of A's height");
  const std::size_t n = inst.n();

  if (const auto it = j.find("sample_times"); it != j.end()) {
    inst.sample_times = parse_numbers(*it, "sample_times", origin);
  } else if (inst.discrete) {
    inst.sample_times = {1.0};
  } else {
    fail_parse(origin, "missing field 'sample_times'");
  }
  for (const double t : inst.sample_times)
    if (!(t > 0.0))
      throw validation_error(origin + ": sample times must be positive");

  box state = j.contains("safety_bounds")
                  ? parse_bounds(j["safety_bounds"], "safety_bounds", n, origin)
                  : default_bounds(n);
  box init = j.contains("init_bounds")
                 ? parse_bounds(j["init_bounds"], "init_bounds", n, origin)
                 : state;
  interval input(-1.0, 1.0);
  if (j.contains("input_bounds")) {
    const box u = parse_bounds(j["input_bounds"], "input_bounds", 1, origin);
    input = u.dims.front();
  }
  try {
    inst.spec = safety_spec(std::move(state), input, std::move(init));
  } catch (const validation_error& e) {
    throw validation_error(origin + ": " + e.what());
  }

  if (const auto it = j.find("reference"); it != j.end()) {
    const auto r = parse_numbers(*it, "reference", origin);
    for (const double v : r)
      if (v != 0.0)
        throw validation_error(origin +
                               ": nonzero reference inputs are not supported");
  }

  if (j.contains("controller_format"))
    inst.controller_fmt =
        parse_format(j["controller_format"], "controller_format", origin);

  if (const auto it = j.find("plant_precision_schedule"); it != j.end()) {
    if (!it->is_array())
      fail_parse(origin, "plant_precision_schedule must be an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      inst.plant_schedule.push_back(parse_format(
          (*it)[i], "plant_precision_schedule[" + std::to_string(i) + "]",
          origin));
  }

  if (const auto it = j.find("adc_dac"); it != j.end()) {
    if (!it->is_object()) fail_parse(origin, "adc_dac must hold F_adc/F_dac");
    const int f_adc = static_cast<int>(
        number_at(require(*it, "F_adc", origin), "adc_dac.F_adc", origin));
    const int f_dac = static_cast<int>(
        number_at(require(*it, "F_dac", origin), "adc_dac.F_dac", origin));
    if (f_adc != inst.controller_fmt.fraction_bits)
      throw validation_error(
          origin +
          ": the sampling path runs at the controller word, so F_adc must "
          "equal the controller fraction bits");
    inst.dac_fmt = fixed_format(inst.controller_fmt.integer_bits, f_dac);
  }

  if (const auto it = j.find("rederived"); it != j.end()) {
    if (!it->is_boolean()) fail_parse(origin, "rederived must be a boolean");
    inst.rederived = it->get<bool>();
  }

  if (!inst.A.allFinite() || !inst.B.allFinite())
    throw validation_error(origin + ": dynamics must be finite");
  return inst;
}

benchmark_instance load_benchmark(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error(path + ": cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_benchmark(text.str(), path);
}

std::string serialize_benchmark(const benchmark_instance& inst) {
  ordered_json j;
  j["name"] = inst.name;
  j["mode"] = inst.discrete ? "discrete" : "continuous";
  j["A"] = matrix_json(inst.A);
  j["B"] = matrix_json(inst.B);
  j["sample_times"] = inst.sample_times;
  j["init_bounds"] = bounds_json(inst.spec.init_box);
  j["input_bounds"] =
      ordered_json{{"lo", {inst.spec.input_bounds.lo}},
                   {"hi", {inst.spec.input_bounds.hi}}};
  j["safety_bounds"] = bounds_json(inst.spec.state_box);
  j["controller_format"] = format_json(inst.controller_fmt);
  if (!inst.plant_schedule.empty()) {
    ordered_json sched = ordered_json::array();
    for (const auto& fmt : inst.plant_schedule) sched.push_back(format_json(fmt));
    j["plant_precision_schedule"] = std::move(sched);
  }
  if (inst.dac_fmt)
    j["adc_dac"] =
        ordered_json{{"F_adc", inst.controller_fmt.fraction_bits},
                     {"F_dac", inst.dac_fmt->fraction_bits}};
  j["rederived"] = inst.rederived;
  return j.dump(2) + "\n";
}

void save_benchmark(const benchmark_instance& inst, const std::string& path) {
  const std::string text = serialize_benchmark(inst);
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace ctrlsynth
