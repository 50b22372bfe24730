#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmdp/explore_episodic.hpp"
#include "bmdp/explore_reset.hpp"

namespace bmdp {

struct EnvSpec {
  std::string kind = "random_block";  // random_block | lock | file
  int H = 3, S = 2, A = 2, X = 4;
  double min_reach = 0.15;
  double noise = 0.0;
  int emissions_per_state = 2;
  int decoys = 9;
  std::string path;  // kind == file
};

struct RunSpec {
  std::string name;
  EnvSpec env;
  std::string algorithm = "pco";  // pco | pcr
  std::string oracle = "erm";     // erm | bayes
  std::string param_mode = "practical";
  PracticalOverrides params;
  std::string reset_dataset_mode = "independent";  // pcr only: independent | shared
  double check_epsilon = 0.1;
  std::uint64_t seed_base = 0;
  int seed_count = 1;
};

struct BatchConfig {
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 1;
  std::vector<RunSpec> runs;
};

// Parses the JSON config; unknown/ill-typed fields raise ConfigError naming the field.
BatchConfig parse_config(const std::string& json_text);
BatchConfig load_config_file(const std::string& path);

struct RunOutcome {
  std::string name;
  std::uint64_t seed = 0;
  bool ok = false;          // run completed without error
  std::string error;
  bool cover_pass = false;
  int psi_size = 0;
  double worst_deficit = 0.0;
  long episodes = 0;
  long reset_queries = 0;
  double wall_ms = 0.0;
};

struct BatchOutcome {
  std::vector<RunOutcome> runs;
  int pass_count = 0;
  int fail_count = 0;
  std::string report_json;
};

// Executes the (env, algorithm, params, seeds) matrix; per-run failures are
// recorded, not fatal. jobs > 1 runs independent entries concurrently.
BatchOutcome run_batch(const BatchConfig& config);

// Every numeric field in a report must be described in field_semantics.
// Throws ConfigError naming the first undocumented field.
void validate_report(const std::string& report_json);

// Comparison form with volatile fields (timestamps, wall times) removed.
std::string strip_timing(const std::string& report_json);

}  // namespace bmdp
