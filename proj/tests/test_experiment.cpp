#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "foodcast/experiment.hpp"

using namespace foodcast;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "foodcast_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Small fast experiment over a generated CSV series.
fs::path write_small_config(const fs::path& dir, const std::string& methods,
                            int seeds) {
  ScenarioConfig scenario;
  scenario.length = 90;
  scenario.base_level = 2e6;
  scenario.seasonal_amplitude = 0.1;
  scenario.noise_std = 0.05;
  scenario.shocks = {{ShockKind::step_decline, 50, -0.25, 1, 5},
                     {ShockKind::step_decline, 78, -0.2, 1, 4}};
  scenario.seed = 400;
  write_series(generate(scenario), dir / "series.csv");

  std::ostringstream seeds_json;
  for (int s = 1; s <= seeds; ++s) {
    if (s > 1) seeds_json << ',';
    seeds_json << s;
  }
  std::ofstream out(dir / "experiment.json");
  out << R"({
  "data": {"csv": "series.csv", "frequency": "monthly"},
  "test_periods": 18,
  "pool": {
    "model_types": ["moving_average", "ses_plain", "seasonal_naive", "damped_trend"],
    "train_lengths": [6, 12, 24, "all"],
    "window_strategies": ["expanding", "sliding"]
  },
  "feature_windows": [2, 4, 6],
  "cluster_candidates": [4],
  "ga": {"generations": 25, "population_size": 30},
  "ppo": {"learning_rate": 1e-3, "total_updates": 15,
          "rollout_episodes_per_update": 2},
  "methods": [)" << methods
      << R"(],
  "seeds": [)" << seeds_json.str()
      << R"(],
  "output_dir": "out"
})";
  return dir / "experiment.json";
}

}  // namespace

TEST_CASE("experiment config loads, validates, and hashes stably") {
  fs::path dir = fresh_dir("config_load");
  fs::path path = write_small_config(dir, R"("SA", "GA")", 2);
  ExperimentConfig config = load_experiment_config(path);
  CHECK(config.test_periods == 18);
  CHECK(config.methods.size() == 2);
  CHECK(config.seeds.size() == 2);
  CHECK(config.pool.train_lengths.size() == 4);
  CHECK(config.ga.generations == 25);
  CHECK(config.ppo.total_updates == 15);
  CHECK_NOTHROW(config.validate());

  std::string h1 = experiment_config_hash(config);
  std::string h2 = experiment_config_hash(config);
  CHECK(h1 == h2);
  CHECK(h1.size() == 16);

  ExperimentConfig changed = config;
  changed.test_periods = 12;
  CHECK(experiment_config_hash(changed) != h1);

  SUBCASE("zero methods is a validation error") {
    ExperimentConfig bad = config;
    bad.methods.clear();
    CHECK_THROWS(bad.validate());
  }
  SUBCASE("zero seeds is a validation error") {
    ExperimentConfig bad = config;
    bad.seeds.clear();
    CHECK_THROWS(bad.validate());
  }
  SUBCASE("missing csv is a validation error") {
    ExperimentConfig bad = config;
    bad.csv_path = dir / "missing.csv";
    CHECK_THROWS(bad.validate());
  }
  SUBCASE("unknown scenario is a validation error") {
    ExperimentConfig bad = config;
    bad.csv_path.reset();
    bad.scenario = "nope";
    CHECK_THROWS(bad.validate());
  }
}

TEST_CASE("scenario configs resolve to generated series") {
  ExperimentConfig config;
  config.scenario = "east_monthly";
  config.scenario_seed = 77;
  DonationSeries series = resolve_series(config);
  CHECK(series.size() == 160);
  CHECK(series.regime_truth().has_value());
  // Fixed data seed: the series does not depend on run seeds.
  DonationSeries again = resolve_series(config);
  CHECK(series == again);
}

TEST_CASE("prediction csv round trips") {
  fs::path dir = fresh_dir("pred_csv");
  std::vector<std::string> periods = {"2018-01", "2018-02", "2018-03"};
  Eigen::VectorXd preds(3);
  preds << 1.25e6, 2.5e6, 3.125e6;
  write_predictions_csv(periods, preds, dir / "p.csv");
  auto [loaded_periods, loaded] = load_predictions_csv(dir / "p.csv");
  CHECK(loaded_periods == periods);
  CHECK(loaded == preds);
}

TEST_CASE("pipeline writes artifacts and reports") {
  fs::path dir = fresh_dir("pipeline_all");
  fs::path path =
      write_small_config(dir, R"("SA", "GA", "RL", "FoodRL")", 1);
  ExperimentConfig config = load_experiment_config(path);
  PipelineOutcome outcome = run_pipeline(config);
  CHECK(outcome.exit_code == 0);
  CHECK(outcome.method_failures.empty());

  fs::path seed_dir = outcome.run_dir / "seed1";
  for (const char* name :
       {"matrix.csv", "predictions_SA.csv", "predictions_GA.csv",
        "predictions_RL.csv", "predictions_FoodRL.csv", "weights_GA.csv",
        "policy_RL.bin", "policy_FoodRL.bin", "reward_curve_RL.csv",
        "reward_curve_FoodRL.csv", "assignment.json"}) {
    CHECK_MESSAGE(fs::exists(seed_dir / name), name);
  }
  for (const char* name :
       {"report.json", "report.md", "regime_table.csv", "per_step.csv"}) {
    CHECK_MESSAGE(fs::exists(outcome.run_dir / name), name);
  }
  CHECK(outcome.report.methods.size() == 4);

  // Stored SA predictions equal recomputing simple averaging from the
  // stored matrix (the subcommand composition contract).
  ForecastMatrix matrix =
      load_matrix_csv(seed_dir / "matrix.csv", Frequency::monthly);
  Eigen::VectorXd sa = run_simple_average(matrix, config.test_periods);
  auto [periods, stored] =
      load_predictions_csv(seed_dir / "predictions_SA.csv");
  REQUIRE(stored.size() == sa.size());
  for (Eigen::Index t = 0; t < sa.size(); ++t) {
    CHECK(stored(t) == doctest::Approx(sa(t)).epsilon(1e-12));
  }
}

TEST_CASE("pipeline reruns are byte-identical") {
  fs::path dir = fresh_dir("pipeline_determinism");
  fs::path path = write_small_config(dir, R"("SA", "FoodRL")", 2);
  ExperimentConfig config = load_experiment_config(path);

  PipelineOutcome first = run_pipeline(config);
  std::map<std::string, std::string> snapshots;
  for (const auto& entry : fs::recursive_directory_iterator(first.run_dir)) {
    if (entry.is_regular_file()) {
      snapshots[entry.path().lexically_relative(first.run_dir).string()] =
          slurp(entry.path());
    }
  }
  REQUIRE(snapshots.size() >= 8);

  PipelineOutcome second = run_pipeline(config);
  CHECK(second.run_dir == first.run_dir);
  for (const auto& [rel, contents] : snapshots) {
    CHECK_MESSAGE(slurp(first.run_dir / rel) == contents, rel);
  }
}

TEST_CASE("a failing method is recorded without aborting the rest") {
  fs::path dir = fresh_dir("pipeline_partial");
  fs::path path = write_small_config(dir, R"("SA", "FoodRL")", 1);
  ExperimentConfig config = load_experiment_config(path);
  config.cluster_candidates = {100000};  // no valid k: FoodRL must fail
  PipelineOutcome outcome = run_pipeline(config);
  CHECK(outcome.exit_code == 2);
  REQUIRE(outcome.method_failures.size() == 1);
  CHECK(outcome.method_failures[0].find("FoodRL") != std::string::npos);
  CHECK(fs::exists(outcome.run_dir / "failures.json"));
  CHECK(fs::exists(outcome.run_dir / "report.json"));  // SA still reported
  CHECK(outcome.report.methods.size() == 1);
}

TEST_CASE("cli subcommands compose") {
  fs::path dir = fresh_dir("cli_compose");
  fs::path config_path = write_small_config(dir, R"("SA")", 1);
  const std::string cli = FOODCAST_CLI_PATH;
  auto run_cmd = [&](const std::string& args) {
    std::string cmd = cli + " --log-level quiet " + args + " 2>/dev/null";
    return std::system(cmd.c_str());
  };

  // drift: period,regime CSV out.
  CHECK(run_cmd("drift --input " + (dir / "series.csv").string() +
                " --frequency monthly --out " + (dir / "labels.csv").string()) == 0);
  std::string labels = slurp(dir / "labels.csv");
  CHECK(labels.rfind("period,regime", 0) == 0);

  // matrix then evaluate with SA equals run with methods=SA.
  CHECK(run_cmd("matrix --input " + (dir / "series.csv").string() +
                " --frequency monthly --config " + config_path.string() +
                " --out " + (dir / "matrix.csv").string()) == 0);
  CHECK(run_cmd("evaluate --series " + (dir / "series.csv").string() +
                " --frequency monthly --test-periods 18 --sa-from-matrix " +
                (dir / "matrix.csv").string() + " --seed 1 --out " +
                (dir / "eval").string()) == 0);

  CHECK(run_cmd("run --config " + config_path.string()) == 0);
  ExperimentConfig config = load_experiment_config(config_path);
  fs::path run_dir = dir / "out" / experiment_config_hash(config);
  CHECK(slurp(dir / "eval" / "report.json") == slurp(run_dir / "report.json"));

  // Invalid config exits with the validation code.
  CHECK(run_cmd("run --config " + config_path.string() + " --methods bogus") != 0);
}
