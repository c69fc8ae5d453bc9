#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "foodcast/drift_segment.hpp"
#include "foodcast/experiment.hpp"
#include "foodcast/model_cluster.hpp"

namespace fs = std::filesystem;
using namespace foodcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitPartialFailure = 2;
constexpr int kExitInternal = 3;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string& message) {
  if (g_log_level >= 1) std::cerr << "[foodcast] " << message << '\n';
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& methods,
            const std::string& seeds, const std::string& out_dir) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!methods.empty()) {
    config.methods.clear();
    for (const std::string& m : split_csv(methods)) {
      config.methods.push_back(method_from_string(m));
    }
  }
  if (!seeds.empty()) {
    config.seeds.clear();
    for (const std::string& s : split_csv(seeds)) {
      config.seeds.push_back(std::stoull(s));
    }
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  config.validate();

  log_info("running pipeline, artifacts under " +
           (config.output_dir / experiment_config_hash(config)).string());
  PipelineOutcome outcome = run_pipeline(config);
  for (const std::string& failure : outcome.method_failures) {
    std::cerr << "[foodcast] method failure: " << failure << '\n';
  }
  log_info("report written to " + (outcome.run_dir / "report.md").string());
  return outcome.exit_code == 0 ? kExitOk : kExitPartialFailure;
}

int cmd_generate(bool suite, const std::string& scenario_path,
                 std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<NamedScenario> scenarios;
  if (suite) {
    scenarios = benchmark_suite(seed);
  } else {
    ScenarioConfig config = load_scenario(scenario_path);
    scenarios.push_back({fs::path(scenario_path).stem().string(), config});
  }
  for (const NamedScenario& s : scenarios) {
    DonationSeries series = generate(s.config);
    write_scenario(s.config, fs::path(out_dir) / (s.name + ".json"));
    write_series(series, fs::path(out_dir) / (s.name + ".csv"));
    write_regime_truth(series, fs::path(out_dir) / (s.name + "_regimes.csv"));
    log_info("generated " + s.name + " (N=" + std::to_string(series.size()) + ")");
  }
  return kExitOk;
}

int cmd_matrix(const std::string& input, const std::string& frequency,
               const std::string& config_path, const std::string& out_path,
               std::uint64_t seed) {
  Frequency freq = frequency_from_string(frequency);
  DonationSeries series = load_series(input, freq);
  PoolConfig pool = PoolConfig::defaults(freq);
  if (!config_path.empty()) {
    pool = load_experiment_config(config_path).pool;
  }
  std::vector<ModelSpec> specs = enumerate_specs(pool, freq);
  log_info("building forecast matrix with " + std::to_string(specs.size()) +
           " specs");
  ForecastMatrix matrix = build_forecast_matrix(series, specs, seed);
  write_matrix_csv(matrix, out_path);
  return kExitOk;
}

int cmd_cluster(const std::string& matrix_path, const std::string& frequency,
                int test_periods, int k, std::uint64_t seed,
                const std::string& out_path) {
  Frequency freq = frequency_from_string(frequency);
  ForecastMatrix matrix = load_matrix_csv(matrix_path, freq);
  if (test_periods < 0 || test_periods >= matrix.rows()) {
    throw std::invalid_argument("cluster: bad --test-periods");
  }
  ForecastMatrix train = matrix.top_rows(matrix.rows() - test_periods);
  ClusterAssignment assignment = cluster_learners(train, k, seed);
  write_assignment_json(assignment, matrix.specs(), out_path);
  log_info("clustered " + std::to_string(matrix.cols()) + " learners into " +
           std::to_string(k) + " clusters (inertia " +
           std::to_string(assignment.inertia) + ")");
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& method_name,
              std::uint64_t seed, const std::string& out_dir) {
  ExperimentConfig config = load_experiment_config(config_path);
  Method method = method_from_string(method_name);
  if (method != Method::RL && method != Method::FoodRL) {
    throw std::invalid_argument("train: method must be RL or FoodRL");
  }
  fs::create_directories(out_dir);

  DonationSeries series = resolve_series(config);
  std::vector<ModelSpec> specs = enumerate_specs(config.pool, series.frequency());
  ForecastMatrix matrix = build_forecast_matrix(series, specs, seed);
  Eigen::Index n_train = series.size() - config.test_periods;

  RlRunConfig rl;
  rl.ppo = config.ppo;
  rl.feature_windows = config.feature_windows;
  rl.test_periods = config.test_periods;
  rl.seed = seed;
  if (method == Method::FoodRL) {
    rl.k_clusters =
        select_k(matrix.top_rows(n_train), config.cluster_candidates, seed);
    log_info("selected k=" + std::to_string(*rl.k_clusters));
  }
  RlRunResult result = run_rl_ensemble(series, matrix, rl);

  std::string tag = to_string(method);
  PpoConfig saved = config.ppo;
  saved.seed = seed;
  save_policy(result.policy, saved, fs::path(out_dir) / ("policy_" + tag + ".bin"));
  write_reward_curve_csv(result.reward_curve,
                         fs::path(out_dir) / ("reward_curve_" + tag + ".csv"));
  std::vector<std::string> periods;
  for (Eigen::Index t = n_train; t < series.size(); ++t) {
    periods.push_back(series.period_string(t));
  }
  write_predictions_csv(periods, result.test_predictions,
                        fs::path(out_dir) / ("predictions_" + tag + ".csv"));
  if (result.assignment) {
    write_assignment_json(*result.assignment, specs,
                          fs::path(out_dir) / "assignment.json");
  }
  log_info("trained " + tag + ", final mean episode reward " +
           std::to_string(result.reward_curve.back()));
  return kExitOk;
}

int cmd_evaluate(const std::string& series_path, const std::string& frequency,
                 int test_periods, const std::vector<std::string>& pred_args,
                 const std::string& sa_matrix, std::uint64_t seed,
                 const std::string& out_dir) {
  Frequency freq = frequency_from_string(frequency);
  DonationSeries series = load_series(series_path, freq);
  if (test_periods < 1 || test_periods >= series.size()) {
    throw std::invalid_argument("evaluate: bad --test-periods");
  }
  SeriesSplit split = split_train_test(series, test_periods);
  fs::create_directories(out_dir);

  std::vector<MethodRunResults> runs;
  if (!sa_matrix.empty()) {
    ForecastMatrix matrix = load_matrix_csv(sa_matrix, freq);
    MethodRunResults sa;
    sa.method = "SA";
    sa.per_seed_predictions.push_back(run_simple_average(matrix, test_periods));
    runs.push_back(std::move(sa));
  }
  for (const std::string& arg : pred_args) {
    auto eq = arg.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("evaluate: --pred expects NAME=path, got " + arg);
    }
    MethodRunResults run;
    run.method = arg.substr(0, eq);
    auto [periods, values] = load_predictions_csv(arg.substr(eq + 1));
    if (values.size() != test_periods) {
      throw std::invalid_argument("evaluate: " + run.method + " has " +
                                  std::to_string(values.size()) +
                                  " rows, expected " +
                                  std::to_string(test_periods));
    }
    run.per_seed_predictions.push_back(std::move(values));
    runs.push_back(std::move(run));
  }
  if (runs.empty()) {
    throw std::invalid_argument("evaluate: no predictions given");
  }

  std::vector<DriftLabel> labels = label_drift(series, seed);
  std::vector<DriftLabel> test_labels(labels.end() - test_periods, labels.end());
  EvalReport report = summarize(runs, split.test.values(), test_labels,
                                periods_per_year(freq));
  for (Eigen::Index t = split.split_index; t < series.size(); ++t) {
    report.step_names.push_back(series.period_string(t));
  }
  write_report_json(report, fs::path(out_dir) / "report.json");
  write_report_markdown(report, fs::path(out_dir) / "report.md");
  write_regime_report_csv(report.regime, fs::path(out_dir) / "regime_table.csv");
  write_per_step_csv(report, fs::path(out_dir) / "per_step.csv");
  log_info("report written to " + (fs::path(out_dir) / "report.md").string());
  return kExitOk;
}

int cmd_drift(const std::string& input, const std::string& frequency,
              std::uint64_t seed, const std::string& out_path) {
  Frequency freq = frequency_from_string(frequency);
  DonationSeries series = load_series(input, freq);
  std::vector<DriftLabel> labels = label_drift(series, seed);
  write_labels_csv(series, labels, out_path);
  log_info("labeled " + std::to_string(series.size()) + " steps");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive meta-ensemble forecasting for donation volumes"};
  app.require_subcommand(1);

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "quiet, info, or debug");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config");
  std::string run_config, run_methods, run_seeds, run_out;
  run->add_option("--config", run_config, "experiment config (JSON)")->required();
  run->add_option("--methods", run_methods, "override: comma-separated methods");
  run->add_option("--seeds", run_seeds, "override: comma-separated seeds");
  run->add_option("--out", run_out, "override: output directory");

  // generate
  auto* generate = app.add_subcommand("generate", "Emit benchmark scenarios");
  bool gen_suite = false;
  std::string gen_scenario, gen_out = "scenarios";
  std::uint64_t gen_seed = 1234;
  generate->add_flag("--suite", gen_suite, "emit the canonical benchmark suite");
  generate->add_option("--scenario", gen_scenario, "scenario config to generate");
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("--out", gen_out, "output directory");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Build the forecast matrix only");
  std::string mat_input, mat_freq = "monthly", mat_config, mat_out = "matrix.csv";
  std::uint64_t mat_seed = 0;
  matrix->add_option("--input", mat_input, "series CSV")->required();
  matrix->add_option("--frequency", mat_freq, "monthly or weekly");
  matrix->add_option("--config", mat_config, "experiment config for the pool");
  matrix->add_option("--seed", mat_seed, "pool seed");
  matrix->add_option("--out", mat_out, "output CSV");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster learners from a matrix");
  std::string clu_matrix, clu_freq = "monthly", clu_out = "assignment.json";
  int clu_test = 24, clu_k = 40;
  std::uint64_t clu_seed = 0;
  cluster->add_option("--matrix", clu_matrix, "forecast matrix CSV")->required();
  cluster->add_option("--frequency", clu_freq, "monthly or weekly");
  cluster->add_option("--test-periods", clu_test, "rows held out from clustering");
  cluster->add_option("--k", clu_k, "cluster count")->required();
  cluster->add_option("--seed", clu_seed, "kmeans seed");
  cluster->add_option("--out", clu_out, "output JSON");

  // train
  auto* train = app.add_subcommand("train", "Train the RL policy only");
  std::string trn_config, trn_method = "FoodRL", trn_out = "trained";
  std::uint64_t trn_seed = 0;
  train->add_option("--config", trn_config, "experiment config (JSON)")->required();
  train->add_option("--method", trn_method, "RL or FoodRL");
  train->add_option("--seed", trn_seed, "training seed");
  train->add_option("--out", trn_out, "output directory");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Report from prediction CSVs");
  std::string eva_series, eva_freq = "monthly", eva_sa_matrix, eva_out = "report";
  int eva_test = 24;
  std::uint64_t eva_seed = 0;
  std::vector<std::string> eva_preds;
  evaluate->add_option("--series", eva_series, "series CSV")->required();
  evaluate->add_option("--frequency", eva_freq, "monthly or weekly");
  evaluate->add_option("--test-periods", eva_test, "evaluated steps");
  evaluate->add_option("--pred", eva_preds, "NAME=predictions.csv (repeatable)");
  evaluate->add_option("--sa-from-matrix", eva_sa_matrix,
                       "compute SA from this matrix CSV");
  evaluate->add_option("--seed", eva_seed, "drift labeling seed");
  evaluate->add_option("--out", eva_out, "output directory");

  // drift
  auto* drift = app.add_subcommand("drift", "Label a series by drift regime");
  std::string dri_input, dri_freq = "monthly", dri_out = "labels.csv";
  std::uint64_t dri_seed = 0;
  drift->add_option("--input", dri_input, "series CSV")->required();
  drift->add_option("--frequency", dri_freq, "monthly or weekly");
  drift->add_option("--seed", dri_seed, "kmeans seed");
  drift->add_option("--out", dri_out, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  g_log_level = log_level == "quiet" ? 0 : log_level == "debug" ? 2 : 1;

  try {
    if (*run) return cmd_run(run_config, run_methods, run_seeds, run_out);
    if (*generate) {
      if (!gen_suite && gen_scenario.empty()) {
        throw std::invalid_argument("generate: need --suite or --scenario");
      }
      return cmd_generate(gen_suite, gen_scenario, gen_seed, gen_out);
    }
    if (*matrix) return cmd_matrix(mat_input, mat_freq, mat_config, mat_out, mat_seed);
    if (*cluster) {
      return cmd_cluster(clu_matrix, clu_freq, clu_test, clu_k, clu_seed, clu_out);
    }
    if (*train) return cmd_train(trn_config, trn_method, trn_seed, trn_out);
    if (*evaluate) {
      return cmd_evaluate(eva_series, eva_freq, eva_test, eva_preds,
                          eva_sa_matrix, eva_seed, eva_out);
    }
    if (*drift) return cmd_drift(dri_input, dri_freq, dri_seed, dri_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
