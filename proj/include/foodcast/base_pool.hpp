#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "foodcast/core_series.hpp"

namespace foodcast {

enum class ModelType {
  moving_average,
  autoregressive,
  ses_plain,
  holt_winters_plus,
  damped_trend,
  seasonal_naive,
};

enum class WindowStrategy { expanding, sliding };

std::string to_string(ModelType t);
std::string to_string(WindowStrategy s);
ModelType model_type_from_string(const std::string& s);
WindowStrategy window_strategy_from_string(const std::string& s);

/// One base learner identity: model type x training length x window
/// strategy. A null train_length means "all available history".
struct ModelSpec {
  ModelType model_type = ModelType::moving_average;
  std::optional<int> train_length;
  WindowStrategy window_strategy = WindowStrategy::expanding;

  /// Column name "type_len_strategy", e.g. "ses_plain_all_expanding".
  std::string name() const;
  static ModelSpec from_name(const std::string& name);

  bool operator==(const ModelSpec&) const = default;
};

/// Minimum history a model type needs before it can produce a forecast.
int model_minimum_history(ModelType type, Frequency frequency);

/// Cross-product pool configuration.
struct PoolConfig {
  std::vector<ModelType> model_types;
  std::vector<std::optional<int>> train_lengths;
  std::vector<WindowStrategy> window_strategies;

  /// Default pool for a frequency: all six model types, both strategies,
  /// monthly lengths {12,18,24,36,48,60,all}, weekly {26,52,78,104,all}.
  static PoolConfig defaults(Frequency frequency);
};

/// Full cross product minus combinations violating model minima, ordered by
/// (model_type, train_length, window_strategy).
std::vector<ModelSpec> enumerate_specs(const PoolConfig& config,
                                       Frequency frequency);

// --- individual one-step forecasters over a training window -------------
//
// Each takes the window as a dense vector (oldest first) and returns the
// point forecast for the step immediately after it.

double moving_average_forecast(const Eigen::VectorXd& window);
double autoregressive_forecast(const Eigen::VectorXd& window, int order);
double ses_forecast(const Eigen::VectorXd& window, double alpha);
double ses_fit_forecast(const Eigen::VectorXd& window);
double holt_winters_forecast(const Eigen::VectorXd& window, int period,
                             double alpha, double beta, double gamma);
double holt_winters_fit_forecast(const Eigen::VectorXd& window, int period);
double damped_trend_forecast(const Eigen::VectorXd& window, double alpha,
                             double beta, double phi);
double damped_trend_fit_forecast(const Eigen::VectorXd& window);
double seasonal_naive_forecast(const Eigen::VectorXd& window, int period);

/// AR order used by the autoregressive learner (3 monthly, 4 weekly).
int autoregressive_order(Frequency frequency);

/// One-step-ahead forecast for a spec given the history strictly before the
/// target step. Returns nullopt when the spec's minimum history is not met.
/// Available forecasts are clamped at zero.
std::optional<double> fit_predict_one_step(const ModelSpec& spec,
                                           const Eigen::VectorXd& history,
                                           Frequency frequency);

/// Per-step matrix of base-learner predictions; NaN marks unavailability.
class ForecastMatrix {
 public:
  static constexpr double kUnavailable = std::numeric_limits<double>::quiet_NaN();

  ForecastMatrix(Frequency frequency, std::vector<Period> steps,
                 std::vector<ModelSpec> specs, Eigen::MatrixXd entries);

  Frequency frequency() const { return frequency_; }
  const std::vector<Period>& steps() const { return steps_; }
  const std::vector<ModelSpec>& specs() const { return specs_; }
  const Eigen::MatrixXd& entries() const { return entries_; }

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }

  bool available(Eigen::Index t, Eigen::Index j) const {
    return !std::isnan(entries_(t, j));
  }

  /// Count of available predictions at step t (the paper's k_t).
  Eigen::Index available_count(Eigen::Index t) const;

  /// The first `n` rows as a new matrix (used to restrict to a train split).
  ForecastMatrix top_rows(Eigen::Index n) const;

  std::string step_string(Eigen::Index t) const {
    return format_period(steps_[static_cast<std::size_t>(t)], frequency_);
  }

 private:
  Frequency frequency_;
  std::vector<Period> steps_;
  std::vector<ModelSpec> specs_;
  Eigen::MatrixXd entries_;
};

/// Builds the full matrix: entry (t, j) is spec j's forecast for step t from
/// the history values[0, t). Never reads values at or after t.
ForecastMatrix build_forecast_matrix(const DonationSeries& series,
                                     const std::vector<ModelSpec>& specs,
                                     std::uint64_t seed);

/// CSV round trip: `period` column, one column per spec, empty = unavailable.
void write_matrix_csv(const ForecastMatrix& matrix,
                      const std::filesystem::path& path);
ForecastMatrix load_matrix_csv(const std::filesystem::path& path,
                               Frequency frequency);

}  // namespace foodcast
