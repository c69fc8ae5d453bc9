#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foodcast/base_pool.hpp"
#include "foodcast/core_series.hpp"
#include "foodcast/eval_harness.hpp"
#include "foodcast/meta_ensemble.hpp"
#include "foodcast/rl_ensemble.hpp"
#include "foodcast/synth_data.hpp"

namespace foodcast {

enum class Method { SA, GA, RL, FoodRL };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// One experiment: data source, pool, per-method settings, seeds, output.
struct ExperimentConfig {
  // Data source: a benchmark scenario name or an explicit CSV.
  std::optional<std::string> scenario;
  std::uint64_t scenario_seed = 1234;  // data-generation seed, fixed per run
  std::optional<std::filesystem::path> csv_path;
  Frequency frequency = Frequency::monthly;

  Eigen::Index test_periods = 24;
  PoolConfig pool;
  std::vector<int> feature_windows;
  std::vector<int> cluster_candidates = {10, 20, 40};
  GaConfig ga;
  PpoConfig ppo;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// 16-hex-digit FNV-1a hash of the canonical config serialization, used to
/// namespace artifacts.
std::string experiment_config_hash(const ExperimentConfig& config);

/// The series named by the config (generated scenario or loaded CSV).
DonationSeries resolve_series(const ExperimentConfig& config);

/// Per-method prediction CSV (`period,prediction`).
void write_predictions_csv(const std::vector<std::string>& periods,
                           const Eigen::VectorXd& predictions,
                           const std::filesystem::path& path);
std::pair<std::vector<std::string>, Eigen::VectorXd> load_predictions_csv(
    const std::filesystem::path& path);

/// Per-step weight audit CSV (`period,name,weight`).
void write_step_weights_csv(
    const std::vector<std::string>& periods,
    const std::vector<std::vector<std::pair<std::string, double>>>& weights,
    const std::filesystem::path& path);

struct PipelineOutcome {
  int exit_code = 0;  // 0 ok, 2 partial method failure
  std::filesystem::path run_dir;
  std::vector<std::string> method_failures;  // "method/seed: message"
  EvalReport report;
};

/// Runs every configured method for every seed, writes per-seed artifacts
/// (forecast matrix, cluster assignment, predictions, policies, reward
/// curves) and the consolidated report. A failing method is recorded and
/// does not abort the others.
PipelineOutcome run_pipeline(const ExperimentConfig& config);

}  // namespace foodcast
