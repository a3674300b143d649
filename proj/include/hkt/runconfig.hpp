#pragma once

// Plain-text experiment configuration.  Files are key = value lines with
// optional [section] headers; a key inside [solver] is addressed below as
// "solver.key".  '#' and ';' start comments.  Parsing is strict: unknown
// keys are rejected so a typo cannot silently fall back to a default.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hkt {

struct RunConfig {
  // [problem]
  std::string family = "qma";
  int n = 1;
  std::vector<int> dims;        // 4n entries; a single entry is replicated
  std::string chi = "identity"; // "identity" or a .hktg path

  // [data]
  std::string h_mode = "constant"; // constant | file | manufactured
  double h_value = 0.0;
  std::string h_file;
  double amplitude = 0.05;
  std::string shape = "cos_x1";

  // [solver]
  double tol_residual = 1e-9;
  int max_newton = 50;
  int continuity_steps = 1;
  int linear_max_iter = 400;
  double linear_tol = 1e-10;
  std::uint64_t seed = 2024;

  // [lemmas]
  long lemma_samples = 10000;
  double lemma_tol = 1e-9;

  // [sweep]
  std::vector<double> amplitudes = {0.01, 0.02, 0.05, 0.1, 0.2};
  bool sweep_double = true;

  // [ball]
  int ball_points = 21;
  double ball_epsilon = 0.05;
  double ball_halfwidth = 0.25;

  // [structure]
  double structure_h_min = 0.25;
  double structure_h_max = 4.0;
  long structure_samples = 200;

  // [verify]
  std::string input_phi; // defaults to <output.dir>/phi.hktg

  // [output]
  std::string output_dir = "out";

  std::string raw_text;       // exact file contents, hashed for provenance
  std::uint64_t config_hash = 0;
};

// FNV-1a, 64 bit.  Stable across platforms; used to stamp artifacts.
std::uint64_t fnv1a64(const std::string& text);

// Lower-case hexadecimal rendering of a hash, zero padded to 16 digits.
std::string hash_hex(std::uint64_t h);

// Key/value view of a config file after comment stripping and sectioning.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Reads, parses, and validates a config file.  Throws ConfigError with a
// human-readable message on any problem (missing file, unknown key,
// malformed number, invalid dims, ...).
RunConfig load_run_config(const std::string& path);

// Same, from in-memory text (used by tests).
RunConfig run_config_from_text(const std::string& text);

}  // namespace hkt
