#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "foodcast/base_pool.hpp"

namespace foodcast {

/// Nonnegative weights summing to 1 (within 1e-9), over learners or clusters.
struct WeightVector {
  Eigen::VectorXd weights;

  /// Throws unless every entry is in [0,1] and the sum is 1 within 1e-9.
  void validate() const;
};

inline constexpr double kWeightSumTolerance = 1e-9;

/// Weighted ensemble prediction: the dot product of predictions and weights.
double apply_weights(const Eigen::VectorXd& predictions,
                     const WeightVector& weights);

/// Equal weights 1/k.
WeightVector average_weights(Eigen::Index k);

/// Genetic-algorithm settings. The paper fixes the window (24) and the
/// generation count (50); the remaining operator rates are artifact
/// configuration.
struct GaConfig {
  int generations = 50;
  int population_size = 50;
  double selection_fraction = 0.25;
  double crossover_prob = 0.9;
  double mutation_prob = 0.1;
  double mutation_scale = 0.1;
  int fitness_window = 24;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Raised when no model is available throughout a GA fitness window; the
/// caller is expected to fall back to simple averaging for that step.
struct GaNoCandidates : std::runtime_error {
  GaNoCandidates() : std::runtime_error("no model available throughout the GA window") {}
};

struct GaResult {
  WeightVector weights;
  double window_mae = 0.0;
  std::vector<double> best_fitness_history;  // negative MAE per generation
};

/// Evolves simplex weights minimizing window MAE: truncation selection,
/// uniform crossover, per-gene uniform mutation clamped to [0,1], elitism
/// of one. Fitness is evaluated on the normalized individual so the best
/// fitness is comparable with a simplex grid search. Deterministic per seed.
GaResult ga_optimize(const Eigen::MatrixXd& window_matrix,
                     const Eigen::VectorXd& actuals, const GaConfig& config);

struct GaForecastResult {
  Eigen::VectorXd predictions;  // one per test step
  // Per test step, (column name, weight) over the models that entered the GA.
  std::vector<std::vector<std::pair<std::string, double>>> step_weights;
  std::vector<bool> fallback_steps;  // true where averaging was used
};

/// Refits GA weights per test step on the trailing fitness window and
/// applies them to that step's available predictions.
GaForecastResult run_ga_forecaster(const DonationSeries& series,
                                   const ForecastMatrix& matrix,
                                   const GaConfig& config,
                                   Eigen::Index test_periods);

/// Simple-averaging forecast at one step: mean of available predictions.
/// Throws when nothing is available.
double simple_average_at(const ForecastMatrix& matrix, Eigen::Index t);

/// Simple averaging over the final test_periods steps.
Eigen::VectorXd run_simple_average(const ForecastMatrix& matrix,
                                   Eigen::Index test_periods);

}  // namespace foodcast
