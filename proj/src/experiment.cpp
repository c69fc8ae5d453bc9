#include "foodcast/experiment.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "foodcast/drift_segment.hpp"
#include "foodcast/model_cluster.hpp"

namespace foodcast {
namespace {

using ordered_json = nlohmann::ordered_json;

/// Writers used below go through a temp file plus rename so concurrent runs
/// in one output directory never observe partial artifacts.
template <typename WriteFn>
void atomic_write(const std::filesystem::path& path, WriteFn&& write) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write(tmp);
  std::filesystem::rename(tmp, path);
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  ordered_json data;
  if (c.scenario) {
    data["scenario"] = *c.scenario;
    data["seed"] = c.scenario_seed;
  } else {
    data["csv"] = c.csv_path->string();
    data["frequency"] = to_string(c.frequency);
  }
  j["data"] = data;
  j["test_periods"] = static_cast<std::int64_t>(c.test_periods);
  ordered_json pool;
  pool["model_types"] = ordered_json::array();
  for (ModelType t : c.pool.model_types) pool["model_types"].push_back(to_string(t));
  pool["train_lengths"] = ordered_json::array();
  for (const auto& len : c.pool.train_lengths) {
    if (len) {
      pool["train_lengths"].push_back(*len);
    } else {
      pool["train_lengths"].push_back("all");
    }
  }
  pool["window_strategies"] = ordered_json::array();
  for (WindowStrategy s : c.pool.window_strategies) {
    pool["window_strategies"].push_back(to_string(s));
  }
  j["pool"] = pool;
  j["feature_windows"] = c.feature_windows;
  j["cluster_candidates"] = c.cluster_candidates;
  j["ga"] = {{"generations", c.ga.generations},
             {"population_size", c.ga.population_size},
             {"selection_fraction", c.ga.selection_fraction},
             {"crossover_prob", c.ga.crossover_prob},
             {"mutation_prob", c.ga.mutation_prob},
             {"mutation_scale", c.ga.mutation_scale},
             {"fitness_window", c.ga.fitness_window}};
  j["ppo"] = {{"hidden_layers", c.ppo.hidden_layers},
              {"learning_rate", c.ppo.learning_rate},
              {"epochs_per_update", c.ppo.epochs_per_update},
              {"clip_epsilon", c.ppo.clip_epsilon},
              {"discount", c.ppo.discount},
              {"gae_lambda", c.ppo.gae_lambda},
              {"rollout_episodes_per_update", c.ppo.rollout_episodes_per_update},
              {"total_updates", c.ppo.total_updates},
              {"entropy_coeff", c.ppo.entropy_coeff},
              {"value_coeff", c.ppo.value_coeff}};
  j["methods"] = ordered_json::array();
  for (Method m : c.methods) j["methods"].push_back(to_string(m));
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir.string();
  return j;
}

const NamedScenario& find_scenario(const std::vector<NamedScenario>& suite,
                                   const std::string& name) {
  for (const NamedScenario& s : suite) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::SA: return "SA";
    case Method::GA: return "GA";
    case Method::RL: return "RL";
    case Method::FoodRL: return "FoodRL";
  }
  throw std::logic_error("unknown method");
}

Method method_from_string(const std::string& s) {
  if (s == "SA") return Method::SA;
  if (s == "GA") return Method::GA;
  if (s == "RL") return Method::RL;
  if (s == "FoodRL") return Method::FoodRL;
  throw std::invalid_argument("unknown method: " + s +
                              " (expected SA, GA, RL, or FoodRL)");
}

void ExperimentConfig::validate() const {
  if (!scenario && !csv_path) {
    throw std::invalid_argument("config: data source missing (scenario or csv)");
  }
  if (scenario && csv_path) {
    throw std::invalid_argument("config: give either a scenario or a csv, not both");
  }
  if (csv_path && !std::filesystem::exists(*csv_path)) {
    throw std::invalid_argument("config: csv does not exist: " +
                                csv_path->string());
  }
  if (scenario) {
    find_scenario(benchmark_suite(scenario_seed), *scenario);
  }
  if (methods.empty()) throw std::invalid_argument("config: no methods");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  if (test_periods < 1) throw std::invalid_argument("config: bad test_periods");
  if (feature_windows.empty()) {
    throw std::invalid_argument("config: no feature windows");
  }
  if (cluster_candidates.empty()) {
    throw std::invalid_argument("config: no cluster candidates");
  }
  ga.validate();
  ppo.validate();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }

  ExperimentConfig c;
  const ordered_json& data = j.at("data");
  if (data.contains("scenario")) {
    c.scenario = data["scenario"].get<std::string>();
    if (data.contains("seed")) c.scenario_seed = data["seed"].get<std::uint64_t>();
    c.frequency =
        find_scenario(benchmark_suite(c.scenario_seed), *c.scenario).config.frequency;
  } else if (data.contains("csv")) {
    std::filesystem::path csv = data["csv"].get<std::string>();
    if (csv.is_relative()) csv = path.parent_path() / csv;
    c.csv_path = csv;
    c.frequency = frequency_from_string(data.at("frequency").get<std::string>());
  } else {
    throw std::runtime_error(path.string() + ": data needs scenario or csv");
  }

  if (j.contains("test_periods")) c.test_periods = j["test_periods"].get<int>();

  if (j.contains("pool")) {
    const ordered_json& pool = j["pool"];
    for (const auto& t : pool.at("model_types")) {
      c.pool.model_types.push_back(model_type_from_string(t.get<std::string>()));
    }
    for (const auto& len : pool.at("train_lengths")) {
      if (len.is_string()) {
        if (len.get<std::string>() != "all") {
          throw std::runtime_error(path.string() + ": bad train length");
        }
        c.pool.train_lengths.push_back(std::nullopt);
      } else {
        c.pool.train_lengths.push_back(len.get<int>());
      }
    }
    for (const auto& s : pool.at("window_strategies")) {
      c.pool.window_strategies.push_back(
          window_strategy_from_string(s.get<std::string>()));
    }
  } else {
    c.pool = PoolConfig::defaults(c.frequency);
  }

  if (j.contains("feature_windows")) {
    c.feature_windows = j["feature_windows"].get<std::vector<int>>();
  } else {
    c.feature_windows = default_feature_windows(c.frequency);
  }
  if (j.contains("cluster_candidates")) {
    c.cluster_candidates = j["cluster_candidates"].get<std::vector<int>>();
  }

  if (j.contains("ga")) {
    const ordered_json& g = j["ga"];
    if (g.contains("generations")) c.ga.generations = g["generations"].get<int>();
    if (g.contains("population_size"))
      c.ga.population_size = g["population_size"].get<int>();
    if (g.contains("selection_fraction"))
      c.ga.selection_fraction = g["selection_fraction"].get<double>();
    if (g.contains("crossover_prob"))
      c.ga.crossover_prob = g["crossover_prob"].get<double>();
    if (g.contains("mutation_prob"))
      c.ga.mutation_prob = g["mutation_prob"].get<double>();
    if (g.contains("mutation_scale"))
      c.ga.mutation_scale = g["mutation_scale"].get<double>();
    if (g.contains("fitness_window"))
      c.ga.fitness_window = g["fitness_window"].get<int>();
  }
  if (j.contains("ppo")) {
    const ordered_json& p = j["ppo"];
    if (p.contains("hidden_layers"))
      c.ppo.hidden_layers = p["hidden_layers"].get<std::vector<int>>();
    if (p.contains("learning_rate"))
      c.ppo.learning_rate = p["learning_rate"].get<double>();
    if (p.contains("epochs_per_update"))
      c.ppo.epochs_per_update = p["epochs_per_update"].get<int>();
    if (p.contains("clip_epsilon"))
      c.ppo.clip_epsilon = p["clip_epsilon"].get<double>();
    if (p.contains("discount")) c.ppo.discount = p["discount"].get<double>();
    if (p.contains("gae_lambda")) c.ppo.gae_lambda = p["gae_lambda"].get<double>();
    if (p.contains("rollout_episodes_per_update"))
      c.ppo.rollout_episodes_per_update =
          p["rollout_episodes_per_update"].get<int>();
    if (p.contains("total_updates"))
      c.ppo.total_updates = p["total_updates"].get<int>();
    if (p.contains("entropy_coeff"))
      c.ppo.entropy_coeff = p["entropy_coeff"].get<double>();
    if (p.contains("value_coeff"))
      c.ppo.value_coeff = p["value_coeff"].get<double>();
  }

  for (const auto& m : j.at("methods")) {
    c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("output_dir")) {
    std::filesystem::path out = j["output_dir"].get<std::string>();
    if (out.is_relative()) out = path.parent_path() / out;
    c.output_dir = out;
  }
  return c;
}

std::string experiment_config_hash(const ExperimentConfig& config) {
  std::string canon = config_to_json(config).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

DonationSeries resolve_series(const ExperimentConfig& config) {
  if (config.scenario) {
    const std::vector<NamedScenario> suite = benchmark_suite(config.scenario_seed);
    return generate(find_scenario(suite, *config.scenario).config);
  }
  return load_series(*config.csv_path, config.frequency);
}

void write_predictions_csv(const std::vector<std::string>& periods,
                           const Eigen::VectorXd& predictions,
                           const std::filesystem::path& path) {
  if (periods.size() != static_cast<std::size_t>(predictions.size())) {
    throw std::invalid_argument("write_predictions_csv: length mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path.string());
  out << "period,prediction\n";
  out.precision(17);
  for (std::size_t i = 0; i < periods.size(); ++i) {
    out << periods[i] << ',' << predictions(static_cast<Eigen::Index>(i)) << '\n';
  }
}

std::pair<std::vector<std::string>, Eigen::VectorXd> load_predictions_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty file");
  }
  std::vector<std::string> periods;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path.string() + ": malformed row: " + line);
    }
    periods.push_back(line.substr(0, comma));
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
  return {std::move(periods), std::move(v)};
}

void write_step_weights_csv(
    const std::vector<std::string>& periods,
    const std::vector<std::vector<std::pair<std::string, double>>>& weights,
    const std::filesystem::path& path) {
  if (periods.size() != weights.size()) {
    throw std::invalid_argument("write_step_weights_csv: length mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write weights: " + path.string());
  out << "period,name,weight\n";
  out.precision(17);
  for (std::size_t i = 0; i < periods.size(); ++i) {
    for (const auto& [name, weight] : weights[i]) {
      out << periods[i] << ',' << name << ',' << weight << '\n';
    }
  }
}

PipelineOutcome run_pipeline(const ExperimentConfig& config) {
  config.validate();

  PipelineOutcome outcome;
  const std::string hash = experiment_config_hash(config);
  outcome.run_dir = config.output_dir / hash;
  std::filesystem::create_directories(outcome.run_dir);

  const DonationSeries series = resolve_series(config);
  const SeriesSplit split = split_train_test(series, config.test_periods);
  const Eigen::Index n_train = split.split_index;

  // The base pool is deterministic, so the matrix is shared across seeds.
  const std::vector<ModelSpec> specs =
      enumerate_specs(config.pool, series.frequency());
  const ForecastMatrix matrix = build_forecast_matrix(series, specs, 0);

  std::vector<std::string> test_periods_str;
  for (Eigen::Index t = n_train; t < series.size(); ++t) {
    test_periods_str.push_back(series.period_string(t));
  }

  std::map<Method, MethodRunResults> results;
  for (Method m : config.methods) results[m] = {to_string(m), {}};

  for (std::uint64_t seed : config.seeds) {
    std::filesystem::path seed_dir =
        outcome.run_dir / ("seed" + std::to_string(seed));
    std::filesystem::create_directories(seed_dir);
    atomic_write(seed_dir / "matrix.csv", [&](const std::filesystem::path& p) {
      write_matrix_csv(matrix, p);
    });
    if (series.regime_truth()) {
      atomic_write(seed_dir / "regime_truth.csv",
                   [&](const std::filesystem::path& p) {
                     write_regime_truth(series, p);
                   });
    }

    for (Method method : config.methods) {
      try {
        switch (method) {
          case Method::SA: {
            Eigen::VectorXd preds = run_simple_average(matrix, config.test_periods);
            atomic_write(seed_dir / "predictions_SA.csv",
                         [&](const std::filesystem::path& p) {
                           write_predictions_csv(test_periods_str, preds, p);
                         });
            results[method].per_seed_predictions.push_back(std::move(preds));
            break;
          }
          case Method::GA: {
            GaConfig ga = config.ga;
            ga.seed = seed;
            GaForecastResult ga_result =
                run_ga_forecaster(series, matrix, ga, config.test_periods);
            atomic_write(seed_dir / "predictions_GA.csv",
                         [&](const std::filesystem::path& p) {
                           write_predictions_csv(test_periods_str,
                                                 ga_result.predictions, p);
                         });
            atomic_write(seed_dir / "weights_GA.csv",
                         [&](const std::filesystem::path& p) {
                           write_step_weights_csv(test_periods_str,
                                                  ga_result.step_weights, p);
                         });
            results[method].per_seed_predictions.push_back(
                std::move(ga_result.predictions));
            break;
          }
          case Method::RL:
          case Method::FoodRL: {
            RlRunConfig rl;
            rl.ppo = config.ppo;
            rl.feature_windows = config.feature_windows;
            rl.test_periods = config.test_periods;
            rl.seed = seed;
            if (method == Method::FoodRL) {
              rl.k_clusters = select_k(matrix.top_rows(n_train),
                                       config.cluster_candidates, seed);
            }
            RlRunResult rl_result = run_rl_ensemble(series, matrix, rl);
            std::string tag = to_string(method);
            atomic_write(seed_dir / ("predictions_" + tag + ".csv"),
                         [&](const std::filesystem::path& p) {
                           write_predictions_csv(test_periods_str,
                                                 rl_result.test_predictions, p);
                         });
            atomic_write(seed_dir / ("policy_" + tag + ".bin"),
                         [&](const std::filesystem::path& p) {
                           PpoConfig saved = config.ppo;
                           saved.seed = seed;
                           save_policy(rl_result.policy, saved, p);
                         });
            atomic_write(seed_dir / ("reward_curve_" + tag + ".csv"),
                         [&](const std::filesystem::path& p) {
                           write_reward_curve_csv(rl_result.reward_curve, p);
                         });
            if (rl_result.assignment) {
              atomic_write(seed_dir / "assignment.json",
                           [&](const std::filesystem::path& p) {
                             write_assignment_json(*rl_result.assignment, specs, p);
                           });
            }
            results[method].per_seed_predictions.push_back(
                std::move(rl_result.test_predictions));
            break;
          }
        }
      } catch (const std::exception& e) {
        outcome.method_failures.push_back(to_string(method) + "/seed" +
                                          std::to_string(seed) + ": " + e.what());
      }
    }
  }

  // Consolidated report over the methods that produced results.
  std::vector<MethodRunResults> run_results;
  for (Method m : config.methods) {
    if (!results[m].per_seed_predictions.empty()) {
      run_results.push_back(std::move(results[m]));
    }
  }
  if (!run_results.empty()) {
    std::vector<DriftLabel> labels = label_drift(series, config.seeds.front());
    std::vector<DriftLabel> test_labels(labels.begin() + n_train, labels.end());
    outcome.report = summarize(run_results, split.test.values(), test_labels,
                               periods_per_year(series.frequency()));
    outcome.report.step_names = test_periods_str;
    atomic_write(outcome.run_dir / "report.json",
                 [&](const std::filesystem::path& p) {
                   write_report_json(outcome.report, p);
                 });
    atomic_write(outcome.run_dir / "report.md",
                 [&](const std::filesystem::path& p) {
                   write_report_markdown(outcome.report, p);
                 });
    atomic_write(outcome.run_dir / "regime_table.csv",
                 [&](const std::filesystem::path& p) {
                   write_regime_report_csv(outcome.report.regime, p);
                 });
    atomic_write(outcome.run_dir / "per_step.csv",
                 [&](const std::filesystem::path& p) {
                   write_per_step_csv(outcome.report, p);
                 });
  }
  if (!outcome.method_failures.empty()) {
    ordered_json failures = outcome.method_failures;
    atomic_write(outcome.run_dir / "failures.json",
                 [&](const std::filesystem::path& p) {
                   std::ofstream out(p);
                   out << failures.dump(2) << '\n';
                 });
    outcome.exit_code = 2;
  }
  return outcome;
}

}  // namespace foodcast
