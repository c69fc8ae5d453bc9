#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "foodcast/drift_segment.hpp"

namespace foodcast {

/// Pounds of food per meal (Feeding America conversion).
inline constexpr double kPoundsPerMeal = 1.2;

/// Mean absolute error in pounds.
double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals);

/// Mean absolute percentage error (percent). Actuals must be positive.
double mape(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals);

/// Per-step absolute errors and absolute percent errors.
Eigen::VectorXd step_abs_errors(const Eigen::VectorXd& predictions,
                                const Eigen::VectorXd& actuals);
Eigen::VectorXd step_ape(const Eigen::VectorXd& predictions,
                         const Eigen::VectorXd& actuals);

enum class WilcoxonMethod { automatic, exact, normal_approx };

struct WilcoxonResult {
  double statistic = 0.0;  // min of the signed-rank sums
  double p_value = 1.0;    // two-sided
  int n = 0;               // pairs after dropping zero differences
};

/// Wilcoxon signed-rank test with midrank ties and zero differences
/// dropped. Exact p by enumeration for n <= 20; normal approximation with
/// tie and continuity corrections above. Needs >= 5 nonzero differences.
WilcoxonResult wilcoxon_signed_rank(
    const Eigen::VectorXd& a, const Eigen::VectorXd& b,
    WilcoxonMethod method = WilcoxonMethod::automatic);

/// Pounds-to-meals conversion.
inline double meals_equivalent(double pound_delta) {
  return pound_delta / kPoundsPerMeal;
}

/// One method's predictions across seeds over the evaluated steps.
struct MethodRunResults {
  std::string method;
  std::vector<Eigen::VectorXd> per_seed_predictions;
};

struct MethodSummary {
  std::string method;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  double mape_mean = 0.0;
  double mape_std = 0.0;
  Eigen::VectorXd per_step_mae;   // seed-averaged absolute error
  Eigen::VectorXd per_step_mape;  // seed-averaged absolute percent error
};

struct PairwiseTest {
  std::string method_a;
  std::string method_b;
  double statistic = 0.0;
  double p_value = 1.0;
  std::string note;  // set when the test was not applicable
};

struct MealsRow {
  std::string method;
  double mae_delta = 0.0;     // reference MAE minus method MAE
  double annual_meals = 0.0;  // delta * periods-per-year / 1.2
};

/// Consolidated evaluation across methods, seeds, and regimes.
struct EvalReport {
  std::vector<MethodSummary> methods;
  std::vector<PairwiseTest> pairwise;
  RegimeReport regime;
  std::vector<MealsRow> meals;
  std::string reference_method;
  int periods_per_year = 12;
  std::vector<std::string> step_names;  // optional, for per-step exports
};

/// Aggregates across steps and seeds (population std), runs pairwise
/// Wilcoxon on seed-averaged per-step MAPE, and attaches the per-regime
/// table plus annualized meals deltas against the reference method
/// (simple averaging when present, else the first method).
EvalReport summarize(const std::vector<MethodRunResults>& runs,
                     const Eigen::VectorXd& actuals,
                     const std::vector<DriftLabel>& labels,
                     int periods_per_year);

void write_report_json(const EvalReport& report,
                       const std::filesystem::path& path);
void write_report_markdown(const EvalReport& report,
                           const std::filesystem::path& path);
void write_per_step_csv(const EvalReport& report,
                        const std::filesystem::path& path);

}  // namespace foodcast
