#include "hkt/runconfig.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hkt/errors.hpp"

namespace hkt {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  for (char c : value) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream lines(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (kv.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

RunConfig run_config_from_text(const std::string& text) {
  RunConfig cfg;
  cfg.raw_text = text;
  cfg.config_hash = fnv1a64(text);

  auto kv = parse_config_text(text);
  std::set<std::string> seen;
  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    seen.insert(key);
    return &it->second;
  };
  auto take_str = [&](const std::string& key, std::string& dst) {
    if (const std::string* v = take(key)) dst = *v;
  };
  auto take_double = [&](const std::string& key, double& dst) {
    if (const std::string* v = take(key)) dst = parse_double(key, *v);
  };
  auto take_int = [&](const std::string& key, int& dst) {
    if (const std::string* v = take(key)) dst = static_cast<int>(parse_long(key, *v));
  };
  auto take_long = [&](const std::string& key, long& dst) {
    if (const std::string* v = take(key)) dst = parse_long(key, *v);
  };
  auto take_bool = [&](const std::string& key, bool& dst) {
    if (const std::string* v = take(key)) dst = parse_bool(key, *v);
  };

  take_str("problem.family", cfg.family);
  take_int("problem.n", cfg.n);
  if (const std::string* v = take("problem.dims")) {
    cfg.dims.clear();
    for (const std::string& item : split_list(*v))
      cfg.dims.push_back(static_cast<int>(parse_long("problem.dims", item)));
  }
  take_str("problem.chi", cfg.chi);

  take_str("data.h", cfg.h_mode);
  take_double("data.h_value", cfg.h_value);
  take_str("data.h_file", cfg.h_file);
  take_double("data.amplitude", cfg.amplitude);
  take_str("data.shape", cfg.shape);

  take_double("solver.tol_residual", cfg.tol_residual);
  take_int("solver.max_newton", cfg.max_newton);
  take_int("solver.continuity_steps", cfg.continuity_steps);
  take_int("solver.linear_max_iter", cfg.linear_max_iter);
  take_double("solver.linear_tol", cfg.linear_tol);
  if (const std::string* v = take("solver.seed"))
    cfg.seed = static_cast<std::uint64_t>(parse_long("solver.seed", *v));

  take_long("lemmas.samples", cfg.lemma_samples);
  take_double("lemmas.tol", cfg.lemma_tol);

  if (const std::string* v = take("sweep.amplitudes")) {
    cfg.amplitudes.clear();
    for (const std::string& item : split_list(*v))
      cfg.amplitudes.push_back(parse_double("sweep.amplitudes", item));
  }
  take_bool("sweep.double_grid", cfg.sweep_double);

  take_int("ball.points", cfg.ball_points);
  take_double("ball.epsilon", cfg.ball_epsilon);
  take_double("ball.halfwidth", cfg.ball_halfwidth);

  take_double("structure.h_min", cfg.structure_h_min);
  take_double("structure.h_max", cfg.structure_h_max);
  take_long("structure.samples", cfg.structure_samples);

  take_str("verify.phi", cfg.input_phi);
  take_str("output.dir", cfg.output_dir);

  for (const auto& [key, value] : kv)
    if (!seen.count(key)) throw ConfigError("unknown config key '" + key + "'");

  // Validation.
  if (cfg.n < 1) throw ConfigError("problem.n must be at least 1");
  if (cfg.dims.empty()) cfg.dims.assign(static_cast<size_t>(4 * cfg.n), 16);
  if (cfg.dims.size() == 1) cfg.dims.assign(static_cast<size_t>(4 * cfg.n), cfg.dims[0]);
  if (cfg.dims.size() != static_cast<size_t>(4 * cfg.n))
    throw ConfigError("problem.dims needs " + std::to_string(4 * cfg.n) +
                      " entries (or one value for all axes)");
  for (int d : cfg.dims) {
    if (d < 1 || (d & (d - 1)) != 0)
      throw ConfigError("problem.dims must be powers of two (got " + std::to_string(d) + ")");
    if (d == 2)
      throw ConfigError("problem.dims: 2-point axes cannot be differentiated; use 1 or >= 4");
  }
  if (cfg.h_mode != "constant" && cfg.h_mode != "file" && cfg.h_mode != "manufactured")
    throw ConfigError("data.h must be constant, file, or manufactured");
  if (cfg.h_mode == "file" && cfg.h_file.empty())
    throw ConfigError("data.h = file requires data.h_file");
  if (cfg.shape != "cos_x1")
    throw ConfigError("data.shape: only cos_x1 is available");
  if (cfg.tol_residual <= 0) throw ConfigError("solver.tol_residual must be positive");
  if (cfg.max_newton < 1) throw ConfigError("solver.max_newton must be at least 1");
  if (cfg.continuity_steps < 1) throw ConfigError("solver.continuity_steps must be at least 1");
  if (cfg.linear_max_iter < 1) throw ConfigError("solver.linear_max_iter must be at least 1");
  if (cfg.linear_tol <= 0) throw ConfigError("solver.linear_tol must be positive");
  if (cfg.lemma_samples < 1) throw ConfigError("lemmas.samples must be at least 1");
  if (cfg.amplitudes.empty()) throw ConfigError("sweep.amplitudes must not be empty");
  if (cfg.ball_points < 5) throw ConfigError("ball.points must be at least 5");
  if (cfg.ball_epsilon <= 0) throw ConfigError("ball.epsilon must be positive");
  if (cfg.ball_halfwidth <= 0 || cfg.ball_halfwidth > 0.5)
    throw ConfigError("ball.halfwidth must lie in (0, 0.5]");
  if (cfg.structure_h_min <= 0 || cfg.structure_h_max <= cfg.structure_h_min)
    throw ConfigError("structure.h_min/h_max must satisfy 0 < h_min < h_max");
  if (cfg.structure_samples < 1) throw ConfigError("structure.samples must be at least 1");
  if (cfg.output_dir.empty()) throw ConfigError("output.dir must not be empty");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_text(buf.str());
}

}  // namespace hkt
