#include "foodcast/base_pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace foodcast {
namespace {

constexpr double kAlphaGrid[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
constexpr double kPhiGrid[] = {0.80, 0.85, 0.90, 0.95};

/// In-sample one-step MAE of SES at a fixed alpha.
double ses_insample_mae(const Eigen::VectorXd& w, double alpha) {
  double level = w(0);
  double abs_err = 0.0;
  for (Eigen::Index t = 1; t < w.size(); ++t) {
    abs_err += std::abs(w(t) - level);
    level = alpha * w(t) + (1.0 - alpha) * level;
  }
  return abs_err / static_cast<double>(w.size() - 1);
}

struct HoltWintersRun {
  double forecast = 0.0;
  double insample_mae = 0.0;
};

HoltWintersRun holt_winters_run(const Eigen::VectorXd& w, int period,
                                double alpha, double beta, double gamma) {
  const Eigen::Index n = w.size();
  const Eigen::Index m = period;
  double cycle1 = w.head(m).mean();
  double cycle2 = w.segment(m, m).mean();
  double level = cycle1;
  double trend = (cycle2 - cycle1) / static_cast<double>(m);
  Eigen::VectorXd seasonal(m);
  for (Eigen::Index i = 0; i < m; ++i) seasonal(i) = w(i) - cycle1;

  double abs_err = 0.0;
  for (Eigen::Index t = m; t < n; ++t) {
    double s = seasonal(t % m);
    double pred = level + trend + s;
    abs_err += std::abs(w(t) - pred);
    double new_level = alpha * (w(t) - s) + (1.0 - alpha) * (level + trend);
    trend = beta * (new_level - level) + (1.0 - beta) * trend;
    seasonal(t % m) = gamma * (w(t) - new_level) + (1.0 - gamma) * s;
    level = new_level;
  }
  HoltWintersRun run;
  run.forecast = level + trend + seasonal(n % m);
  run.insample_mae = abs_err / static_cast<double>(n - m);
  return run;
}

struct DampedRun {
  double forecast = 0.0;
  double insample_mae = 0.0;
};

DampedRun damped_trend_run(const Eigen::VectorXd& w, double alpha, double beta,
                           double phi) {
  const Eigen::Index n = w.size();
  double level = w(0);
  double trend = w(1) - w(0);
  double abs_err = 0.0;
  for (Eigen::Index t = 2; t < n; ++t) {
    double pred = level + phi * trend;
    abs_err += std::abs(w(t) - pred);
    double new_level = alpha * w(t) + (1.0 - alpha) * (level + phi * trend);
    trend = beta * (new_level - level) + (1.0 - beta) * phi * trend;
    level = new_level;
  }
  DampedRun run;
  run.forecast = level + phi * trend;
  run.insample_mae = n > 2 ? abs_err / static_cast<double>(n - 2) : 0.0;
  return run;
}

}  // namespace

std::string to_string(ModelType t) {
  switch (t) {
    case ModelType::moving_average: return "moving_average";
    case ModelType::autoregressive: return "autoregressive";
    case ModelType::ses_plain: return "ses_plain";
    case ModelType::holt_winters_plus: return "holt_winters_plus";
    case ModelType::damped_trend: return "damped_trend";
    case ModelType::seasonal_naive: return "seasonal_naive";
  }
  throw std::logic_error("unknown model type");
}

std::string to_string(WindowStrategy s) {
  return s == WindowStrategy::expanding ? "expanding" : "sliding";
}

ModelType model_type_from_string(const std::string& s) {
  for (ModelType t :
       {ModelType::moving_average, ModelType::autoregressive,
        ModelType::ses_plain, ModelType::holt_winters_plus,
        ModelType::damped_trend, ModelType::seasonal_naive}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown model type: " + s);
}

WindowStrategy window_strategy_from_string(const std::string& s) {
  if (s == "expanding") return WindowStrategy::expanding;
  if (s == "sliding") return WindowStrategy::sliding;
  throw std::invalid_argument("unknown window strategy: " + s);
}

std::string ModelSpec::name() const {
  std::string len = train_length ? std::to_string(*train_length) : "all";
  return to_string(model_type) + "_" + len + "_" + to_string(window_strategy);
}

ModelSpec ModelSpec::from_name(const std::string& name) {
  auto last = name.rfind('_');
  if (last == std::string::npos) {
    throw std::invalid_argument("malformed spec name: " + name);
  }
  auto mid = name.rfind('_', last - 1);
  if (mid == std::string::npos) {
    throw std::invalid_argument("malformed spec name: " + name);
  }
  ModelSpec spec;
  spec.model_type = model_type_from_string(name.substr(0, mid));
  std::string len = name.substr(mid + 1, last - mid - 1);
  if (len != "all") spec.train_length = std::stoi(len);
  spec.window_strategy = window_strategy_from_string(name.substr(last + 1));
  return spec;
}

int model_minimum_history(ModelType type, Frequency frequency) {
  const int period = periods_per_year(frequency);
  switch (type) {
    case ModelType::moving_average: return 1;
    case ModelType::autoregressive:
      return 2 * (autoregressive_order(frequency) + 1);
    case ModelType::ses_plain: return 2;
    case ModelType::holt_winters_plus: return 2 * period;
    case ModelType::damped_trend: return 4;
    case ModelType::seasonal_naive: return period;
  }
  throw std::logic_error("unknown model type");
}

PoolConfig PoolConfig::defaults(Frequency frequency) {
  PoolConfig config;
  config.model_types = {ModelType::moving_average, ModelType::autoregressive,
                        ModelType::ses_plain, ModelType::holt_winters_plus,
                        ModelType::damped_trend, ModelType::seasonal_naive};
  if (frequency == Frequency::monthly) {
    config.train_lengths = {12, 18, 24, 36, 48, 60, std::nullopt};
  } else {
    config.train_lengths = {26, 52, 78, 104, std::nullopt};
  }
  config.window_strategies = {WindowStrategy::expanding, WindowStrategy::sliding};
  return config;
}

std::vector<ModelSpec> enumerate_specs(const PoolConfig& config,
                                       Frequency frequency) {
  if (config.model_types.empty() || config.train_lengths.empty() ||
      config.window_strategies.empty()) {
    throw std::invalid_argument("enumerate_specs: empty pool configuration");
  }
  std::vector<ModelSpec> specs;
  for (ModelType type : config.model_types) {
    int minimum = model_minimum_history(type, frequency);
    for (const std::optional<int>& length : config.train_lengths) {
      if (length && *length < minimum) continue;
      for (WindowStrategy strategy : config.window_strategies) {
        specs.push_back(ModelSpec{type, length, strategy});
      }
    }
  }
  if (specs.empty()) {
    throw std::invalid_argument(
        "enumerate_specs: all combinations violate model minima");
  }
  return specs;
}

int autoregressive_order(Frequency frequency) {
  return frequency == Frequency::monthly ? 3 : 4;
}

double moving_average_forecast(const Eigen::VectorXd& window) {
  return window.mean();
}

double autoregressive_forecast(const Eigen::VectorXd& window, int order) {
  const Eigen::Index n = window.size();
  const Eigen::Index p = order;
  const Eigen::Index rows = n - p;
  Eigen::MatrixXd design(rows, p + 1);
  Eigen::VectorXd target(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    design(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) design(i, j + 1) = window(p + i - 1 - j);
    target(i) = window(p + i);
  }
  Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
  double forecast = coef(0);
  for (Eigen::Index j = 0; j < p; ++j) forecast += coef(j + 1) * window(n - 1 - j);
  return forecast;
}

double ses_forecast(const Eigen::VectorXd& window, double alpha) {
  double level = window(0);
  for (Eigen::Index t = 1; t < window.size(); ++t) {
    level = alpha * window(t) + (1.0 - alpha) * level;
  }
  return level;
}

double ses_fit_forecast(const Eigen::VectorXd& window) {
  double best_alpha = kAlphaGrid[0];
  double best_mae = ses_insample_mae(window, best_alpha);
  for (double alpha : kAlphaGrid) {
    double mae = ses_insample_mae(window, alpha);
    if (mae < best_mae) {
      best_mae = mae;
      best_alpha = alpha;
    }
  }
  return ses_forecast(window, best_alpha);
}

double holt_winters_forecast(const Eigen::VectorXd& window, int period,
                             double alpha, double beta, double gamma) {
  return holt_winters_run(window, period, alpha, beta, gamma).forecast;
}

double holt_winters_fit_forecast(const Eigen::VectorXd& window, int period) {
  double best_mae = std::numeric_limits<double>::infinity();
  double best_forecast = 0.0;
  for (double alpha : kAlphaGrid) {
    for (double beta : kAlphaGrid) {
      for (double gamma : kAlphaGrid) {
        HoltWintersRun run = holt_winters_run(window, period, alpha, beta, gamma);
        if (run.insample_mae < best_mae) {
          best_mae = run.insample_mae;
          best_forecast = run.forecast;
        }
      }
    }
  }
  return best_forecast;
}

double damped_trend_forecast(const Eigen::VectorXd& window, double alpha,
                             double beta, double phi) {
  return damped_trend_run(window, alpha, beta, phi).forecast;
}

double damped_trend_fit_forecast(const Eigen::VectorXd& window) {
  double best_mae = std::numeric_limits<double>::infinity();
  double best_forecast = 0.0;
  for (double alpha : kAlphaGrid) {
    for (double beta : kAlphaGrid) {
      for (double phi : kPhiGrid) {
        DampedRun run = damped_trend_run(window, alpha, beta, phi);
        if (run.insample_mae < best_mae) {
          best_mae = run.insample_mae;
          best_forecast = run.forecast;
        }
      }
    }
  }
  return best_forecast;
}

double seasonal_naive_forecast(const Eigen::VectorXd& window, int period) {
  return window(window.size() - period);
}

std::optional<double> fit_predict_one_step(const ModelSpec& spec,
                                           const Eigen::VectorXd& history,
                                           Frequency frequency) {
  int minimum = model_minimum_history(spec.model_type, frequency);
  if (spec.train_length) minimum = std::max(minimum, *spec.train_length);
  if (history.size() < minimum) return std::nullopt;

  Eigen::VectorXd window =
      (spec.window_strategy == WindowStrategy::sliding && spec.train_length)
          ? history.tail(*spec.train_length).eval()
          : history;

  double forecast = 0.0;
  const int period = periods_per_year(frequency);
  switch (spec.model_type) {
    case ModelType::moving_average:
      forecast = moving_average_forecast(window);
      break;
    case ModelType::autoregressive:
      forecast = autoregressive_forecast(window, autoregressive_order(frequency));
      break;
    case ModelType::ses_plain:
      forecast = ses_fit_forecast(window);
      break;
    case ModelType::holt_winters_plus:
      forecast = holt_winters_fit_forecast(window, period);
      break;
    case ModelType::damped_trend:
      forecast = damped_trend_fit_forecast(window);
      break;
    case ModelType::seasonal_naive:
      forecast = seasonal_naive_forecast(window, period);
      break;
  }
  return std::max(forecast, 0.0);
}

ForecastMatrix::ForecastMatrix(Frequency frequency, std::vector<Period> steps,
                               std::vector<ModelSpec> specs,
                               Eigen::MatrixXd entries)
    : frequency_(frequency),
      steps_(std::move(steps)),
      specs_(std::move(specs)),
      entries_(std::move(entries)) {
  if (entries_.rows() != static_cast<Eigen::Index>(steps_.size()) ||
      entries_.cols() != static_cast<Eigen::Index>(specs_.size())) {
    throw std::invalid_argument("forecast matrix: shape mismatch");
  }
}

Eigen::Index ForecastMatrix::available_count(Eigen::Index t) const {
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < cols(); ++j) {
    if (available(t, j)) ++k;
  }
  return k;
}

ForecastMatrix ForecastMatrix::top_rows(Eigen::Index n) const {
  if (n < 0 || n > rows()) {
    throw std::invalid_argument("forecast matrix: bad row slice");
  }
  std::vector<Period> head_steps(steps_.begin(), steps_.begin() + n);
  return ForecastMatrix(frequency_, std::move(head_steps), specs_,
                        entries_.topRows(n));
}

ForecastMatrix build_forecast_matrix(const DonationSeries& series,
                                     const std::vector<ModelSpec>& specs,
                                     std::uint64_t /*seed*/) {
  if (specs.empty()) {
    throw std::invalid_argument("build_forecast_matrix: no specs");
  }
  const Eigen::Index n = series.size();
  Eigen::MatrixXd entries =
      Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(specs.size()),
                                ForecastMatrix::kUnavailable);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::VectorXd history = series.values().head(t);
    for (std::size_t j = 0; j < specs.size(); ++j) {
      auto forecast = fit_predict_one_step(specs[j], history, series.frequency());
      if (forecast) entries(t, static_cast<Eigen::Index>(j)) = *forecast;
    }
  }
  return ForecastMatrix(series.frequency(), series.timestamps(), specs,
                        std::move(entries));
}

void write_matrix_csv(const ForecastMatrix& matrix,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix: " + path.string());
  out << "period";
  for (const ModelSpec& spec : matrix.specs()) out << ',' << spec.name();
  out << '\n';
  out.precision(17);
  for (Eigen::Index t = 0; t < matrix.rows(); ++t) {
    out << matrix.step_string(t);
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      out << ',';
      if (matrix.available(t, j)) out << matrix.entries()(t, j);
    }
    out << '\n';
  }
}

ForecastMatrix load_matrix_csv(const std::filesystem::path& path,
                               Frequency frequency) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty matrix file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<ModelSpec> specs;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "period") {
      throw std::runtime_error(path.string() + ":1: expected 'period' column");
    }
    while (std::getline(header, cell, ',')) {
      specs.push_back(ModelSpec::from_name(cell));
    }
  }

  std::vector<Period> steps;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    steps.push_back(parse_period(cell, frequency));
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      values.push_back(cell.empty() ? ForecastMatrix::kUnavailable
                                    : std::stod(cell));
    }
    // A row ending in ',' has a trailing unavailable cell the stream drops.
    while (values.size() < specs.size())
      values.push_back(ForecastMatrix::kUnavailable);
    if (values.size() != specs.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": wrong column count");
    }
    rows.push_back(std::move(values));
  }
  Eigen::MatrixXd entries(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(specs.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < specs.size(); ++j) {
      entries(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          rows[t][j];
    }
  }
  return ForecastMatrix(frequency, std::move(steps), std::move(specs),
                        std::move(entries));
}

}  // namespace foodcast
