#include "foodcast/meta_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "foodcast/rng.hpp"

namespace foodcast {
namespace {

/// Genes normalized onto the simplex; degenerate all-zero genes become
/// uniform weights.
Eigen::VectorXd normalize_genes(const Eigen::VectorXd& genes) {
  double sum = genes.sum();
  if (sum <= 1e-12) {
    return Eigen::VectorXd::Constant(genes.size(), 1.0 / genes.size());
  }
  return genes / sum;
}

double window_mae(const Eigen::MatrixXd& window_matrix,
                  const Eigen::VectorXd& actuals, const Eigen::VectorXd& w) {
  return (window_matrix * w - actuals).cwiseAbs().mean();
}

}  // namespace

void WeightVector::validate() const {
  if (weights.size() == 0) {
    throw std::invalid_argument("weight vector: empty");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) >= 0.0 && weights(i) <= 1.0)) {
      throw std::invalid_argument("weight vector: entry outside [0, 1]");
    }
  }
  if (std::abs(weights.sum() - 1.0) > kWeightSumTolerance) {
    throw std::invalid_argument("weight vector: sum not 1 within 1e-9");
  }
}

double apply_weights(const Eigen::VectorXd& predictions,
                     const WeightVector& weights) {
  if (predictions.size() != weights.weights.size()) {
    throw std::invalid_argument("apply_weights: length mismatch");
  }
  weights.validate();
  return predictions.dot(weights.weights);
}

WeightVector average_weights(Eigen::Index k) {
  if (k < 1) throw std::invalid_argument("average_weights: k must be >= 1");
  return WeightVector{Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k))};
}

void GaConfig::validate() const {
  if (generations < 1 || population_size < 1 || fitness_window < 1) {
    throw std::invalid_argument("ga config: counts must be >= 1");
  }
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(selection_fraction) || !in_unit(crossover_prob) ||
      !in_unit(mutation_prob)) {
    throw std::invalid_argument("ga config: probabilities must be in [0, 1]");
  }
  if (mutation_scale < 0.0) {
    throw std::invalid_argument("ga config: mutation_scale must be >= 0");
  }
}

GaResult ga_optimize(const Eigen::MatrixXd& window_matrix,
                     const Eigen::VectorXd& actuals, const GaConfig& config) {
  config.validate();
  if (window_matrix.cols() == 0) throw GaNoCandidates();
  if (window_matrix.rows() != actuals.size() || actuals.size() == 0) {
    throw std::invalid_argument("ga_optimize: window/actuals shape mismatch");
  }
  for (Eigen::Index t = 0; t < actuals.size(); ++t) {
    if (actuals(t) <= 0.0) {
      throw std::invalid_argument("ga_optimize: actuals must be positive");
    }
  }

  const int pop_size = config.population_size;
  const Eigen::Index genes = window_matrix.cols();
  SplitMix64 rng(config.seed);

  Eigen::MatrixXd population(pop_size, genes);
  for (int i = 0; i < pop_size; ++i) {
    for (Eigen::Index g = 0; g < genes; ++g) population(i, g) = rng.uniform();
  }

  auto fitness_of = [&](const Eigen::VectorXd& individual) {
    return -window_mae(window_matrix, actuals, normalize_genes(individual));
  };

  Eigen::VectorXd fitness(pop_size);
  for (int i = 0; i < pop_size; ++i) {
    fitness(i) = fitness_of(population.row(i).transpose());
  }

  const int parent_count =
      std::max(1, static_cast<int>(pop_size * config.selection_fraction));
  std::vector<int> order(static_cast<std::size_t>(pop_size));

  GaResult result;
  result.best_fitness_history.reserve(static_cast<std::size_t>(config.generations));

  for (int gen = 0; gen < config.generations; ++gen) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness(a) > fitness(b); });
    result.best_fitness_history.push_back(fitness(order[0]));

    Eigen::MatrixXd next(pop_size, genes);
    next.row(0) = population.row(order[0]);  // elitism
    for (int i = 1; i < pop_size; ++i) {
      const auto parent_a =
          population.row(order[static_cast<std::size_t>(rng.index(parent_count))]);
      const auto parent_b =
          population.row(order[static_cast<std::size_t>(rng.index(parent_count))]);
      Eigen::VectorXd child = parent_a.transpose();
      if (rng.uniform() < config.crossover_prob) {
        for (Eigen::Index g = 0; g < genes; ++g) {
          if (rng.uniform() < 0.5) child(g) = parent_b(g);
        }
      }
      for (Eigen::Index g = 0; g < genes; ++g) {
        if (rng.uniform() < config.mutation_prob) {
          child(g) += rng.uniform(-config.mutation_scale, config.mutation_scale);
          child(g) = std::clamp(child(g), 0.0, 1.0);
        }
      }
      next.row(i) = child.transpose();
    }
    population = std::move(next);
    for (int i = 0; i < pop_size; ++i) {
      fitness(i) = fitness_of(population.row(i).transpose());
    }
  }

  Eigen::Index best = 0;
  fitness.maxCoeff(&best);
  result.weights.weights = normalize_genes(population.row(best).transpose());
  result.window_mae = -fitness(best);
  result.best_fitness_history.push_back(fitness(best));
  result.weights.validate();
  return result;
}

GaForecastResult run_ga_forecaster(const DonationSeries& series,
                                   const ForecastMatrix& matrix,
                                   const GaConfig& config,
                                   Eigen::Index test_periods) {
  config.validate();
  if (matrix.rows() != series.size()) {
    throw std::invalid_argument("run_ga_forecaster: matrix/series mismatch");
  }
  if (test_periods <= 0 || test_periods >= series.size()) {
    throw std::invalid_argument("run_ga_forecaster: bad test_periods");
  }
  const Eigen::Index n = series.size();
  const Eigen::Index first_test = n - test_periods;

  GaForecastResult result;
  result.predictions.resize(test_periods);
  result.step_weights.resize(static_cast<std::size_t>(test_periods));
  result.fallback_steps.assign(static_cast<std::size_t>(test_periods), false);

  for (Eigen::Index t = first_test; t < n; ++t) {
    const Eigen::Index out = t - first_test;
    const Eigen::Index window_begin = std::max<Eigen::Index>(0, t - config.fitness_window);
    const Eigen::Index window_len = t - window_begin;

    // Models with non-missing predictions across the window and at t.
    std::vector<Eigen::Index> eligible;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (!matrix.available(t, j)) continue;
      bool full = true;
      for (Eigen::Index s = window_begin; s < t && full; ++s) {
        full = matrix.available(s, j);
      }
      if (full) eligible.push_back(j);
    }

    auto& weights_out = result.step_weights[static_cast<std::size_t>(out)];
    try {
      if (eligible.empty() || window_len == 0) throw GaNoCandidates();
      Eigen::MatrixXd window(window_len, static_cast<Eigen::Index>(eligible.size()));
      Eigen::VectorXd preds_at_t(static_cast<Eigen::Index>(eligible.size()));
      for (std::size_t c = 0; c < eligible.size(); ++c) {
        window.col(static_cast<Eigen::Index>(c)) =
            matrix.entries().col(eligible[c]).segment(window_begin, window_len);
        preds_at_t(static_cast<Eigen::Index>(c)) = matrix.entries()(t, eligible[c]);
      }
      GaConfig step_config = config;
      step_config.seed = SplitMix64(config.seed).fork(static_cast<std::uint64_t>(t)).seed();
      GaResult ga = ga_optimize(window, series.values().segment(window_begin, window_len),
                                step_config);
      result.predictions(out) = apply_weights(preds_at_t, ga.weights);
      for (std::size_t c = 0; c < eligible.size(); ++c) {
        weights_out.emplace_back(matrix.specs()[static_cast<std::size_t>(eligible[c])].name(),
                                 ga.weights.weights(static_cast<Eigen::Index>(c)));
      }
    } catch (const GaNoCandidates&) {
      result.fallback_steps[static_cast<std::size_t>(out)] = true;
      result.predictions(out) = simple_average_at(matrix, t);
      Eigen::Index k = matrix.available_count(t);
      WeightVector avg = average_weights(k);
      Eigen::Index c = 0;
      for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        if (matrix.available(t, j)) {
          weights_out.emplace_back(matrix.specs()[static_cast<std::size_t>(j)].name(),
                                   avg.weights(c++));
        }
      }
    }
  }
  return result;
}

double simple_average_at(const ForecastMatrix& matrix, Eigen::Index t) {
  Eigen::Index k = matrix.available_count(t);
  if (k == 0) {
    throw std::runtime_error("simple average: no predictions available at " +
                             matrix.step_string(t));
  }
  Eigen::VectorXd preds(k);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    if (matrix.available(t, j)) preds(c++) = matrix.entries()(t, j);
  }
  return apply_weights(preds, average_weights(k));
}

Eigen::VectorXd run_simple_average(const ForecastMatrix& matrix,
                                   Eigen::Index test_periods) {
  if (test_periods <= 0 || test_periods > matrix.rows()) {
    throw std::invalid_argument("run_simple_average: bad test_periods");
  }
  Eigen::VectorXd out(test_periods);
  const Eigen::Index first = matrix.rows() - test_periods;
  for (Eigen::Index t = first; t < matrix.rows(); ++t) {
    out(t - first) = simple_average_at(matrix, t);
  }
  return out;
}

}  // namespace foodcast
