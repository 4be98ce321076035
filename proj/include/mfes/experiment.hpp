#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfes/config.hpp"
#include "mfes/optimizer.hpp"

#include <nlohmann/json_fwd.hpp>

namespace mfes {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

/// Root directory for all run outputs: MFES_OUTPUT_ROOT overrides the
/// config's output_dir when set.
std::filesystem::path output_root(const RunConfig& config);

struct ComparisonRow {
  std::string mode;
  std::uint64_t seed = 0;
  double final_cost = 0.0;
  int n_sim = 0;
  int n_exp = 0;
  double total_effort = 0.0;
  std::string stop_reason;
};

struct ModeAggregate {
  std::string mode;
  int runs = 0;
  double mean_final_cost = 0.0;
  double std_final_cost = 0.0;
  double mean_n_sim = 0.0;
  double mean_n_exp = 0.0;
  double mean_total_effort = 0.0;
};

struct ComparisonSummary {
  std::vector<ComparisonRow> rows;
  std::vector<ModeAggregate> aggregates;          // one per mode present
  double physical_eval_reduction_pct = 0.0;       // mfes vs es, from mean n_exp
};

ComparisonSummary summarize_comparison(std::vector<ComparisonRow> rows);

/// One optimization run driven by a config: builds the objective and prior,
/// runs the requested mode, and writes runlog.json / iterations.csv (plus
/// problem-specific artifacts) under `dir`.
RunResult execute_run(const RunConfig& config, RunMode mode, std::uint64_t seed,
                      const std::filesystem::path& dir, bool dump_trajectory = false);

int run_synthetic_command(const RunConfig& config, std::uint64_t seed);
int run_cartpole_command(const RunConfig& config, std::uint64_t seed,
                         bool dump_trajectory = false);
int run_compare_command(const RunConfig& config);

nlohmann::json run_log_json(const RunResult& result);
void write_run_log_json(const std::filesystem::path& path, const RunResult& result);
void write_iterations_csv(const std::filesystem::path& path, const RunResult& result);

int count_evaluations(const RunResult& result, Fidelity f);

}  // namespace mfes
