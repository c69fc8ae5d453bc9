#include "foodcast/eval_harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "foodcast/stats.hpp"

namespace foodcast {
namespace {

using ordered_json = nlohmann::ordered_json;

void check_metric_inputs(const Eigen::VectorXd& predictions,
                         const Eigen::VectorXd& actuals, bool positive_actuals) {
  if (predictions.size() != actuals.size()) {
    throw std::invalid_argument("metric: length mismatch");
  }
  if (predictions.size() == 0) {
    throw std::invalid_argument("metric: empty input");
  }
  if (positive_actuals) {
    for (Eigen::Index i = 0; i < actuals.size(); ++i) {
      if (actuals(i) <= 0.0) {
        throw std::invalid_argument("metric: actuals must be positive");
      }
    }
  }
}

/// Midranks of absolute differences.
std::vector<double> midranks(const std::vector<double>& abs_diffs) {
  const std::size_t n = abs_diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
    double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double exact_two_sided_p(const std::vector<double>& ranks, double w_min) {
  const int n = static_cast<int>(ranks.size());
  const std::uint64_t total = 1ULL << n;
  std::uint64_t at_or_below = 0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w_plus = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1ULL << i)) w_plus += ranks[static_cast<std::size_t>(i)];
    }
    if (w_plus <= w_min + 1e-9) ++at_or_below;
  }
  // The null distribution of W+ is symmetric, so the two-sided p doubles
  // the lower tail at the min statistic.
  double p = 2.0 * static_cast<double>(at_or_below) / static_cast<double>(total);
  return std::min(p, 1.0);
}

double normal_two_sided_p(const std::vector<double>& ranks, double w_min) {
  const double n = static_cast<double>(ranks.size());
  double mean = n * (n + 1.0) / 4.0;
  double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;

  // Tie correction: subtract (t^3 - t)/48 per tie group.
  std::map<double, int> groups;
  for (double r : ranks) ++groups[r];
  for (const auto& [rank, count] : groups) {
    if (count > 1) {
      double t = static_cast<double>(count);
      variance -= (t * t * t - t) / 48.0;
    }
  }
  if (variance <= 0.0) {
    throw std::runtime_error("wilcoxon: zero variance (all ranks tied)");
  }
  // Continuity correction toward the mean; w_min <= mean by construction.
  double z = (w_min - mean + 0.5) / std::sqrt(variance);
  double p = 2.0 * normal_cdf(z);
  return std::clamp(p, 0.0, 1.0);
}

Eigen::VectorXd seed_averaged(const std::vector<Eigen::VectorXd>& per_seed,
                              const Eigen::VectorXd& actuals,
                              bool percent) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(actuals.size());
  for (const Eigen::VectorXd& preds : per_seed) {
    acc += percent ? step_ape(preds, actuals) : step_abs_errors(preds, actuals);
  }
  return acc / static_cast<double>(per_seed.size());
}

}  // namespace

double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals) {
  check_metric_inputs(predictions, actuals, true);
  return (predictions - actuals).cwiseAbs().mean();
}

double mape(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals) {
  check_metric_inputs(predictions, actuals, true);
  return ((predictions - actuals).cwiseAbs().cwiseQuotient(actuals) * 100.0).mean();
}

Eigen::VectorXd step_abs_errors(const Eigen::VectorXd& predictions,
                                const Eigen::VectorXd& actuals) {
  check_metric_inputs(predictions, actuals, true);
  return (predictions - actuals).cwiseAbs();
}

Eigen::VectorXd step_ape(const Eigen::VectorXd& predictions,
                         const Eigen::VectorXd& actuals) {
  check_metric_inputs(predictions, actuals, true);
  return (predictions - actuals).cwiseAbs().cwiseQuotient(actuals) * 100.0;
}

WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b,
                                    WilcoxonMethod method) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("wilcoxon: length mismatch");
  }
  std::vector<double> abs_diffs;
  std::vector<int> signs;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double d = a(i) - b(i);
    if (d == 0.0) continue;
    abs_diffs.push_back(std::abs(d));
    signs.push_back(d > 0.0 ? 1 : -1);
  }
  const int n = static_cast<int>(abs_diffs.size());
  if (n < 5) {
    throw std::invalid_argument(
        "wilcoxon: need at least 5 nonzero differences, got " +
        std::to_string(n));
  }

  std::vector<double> ranks = midranks(abs_diffs);
  double w_plus = 0.0, w_minus = 0.0;
  for (int i = 0; i < n; ++i) {
    (signs[static_cast<std::size_t>(i)] > 0 ? w_plus : w_minus) +=
        ranks[static_cast<std::size_t>(i)];
  }
  WilcoxonResult result;
  result.n = n;
  result.statistic = std::min(w_plus, w_minus);

  bool exact = method == WilcoxonMethod::exact ||
               (method == WilcoxonMethod::automatic && n <= 20);
  result.p_value = exact ? exact_two_sided_p(ranks, result.statistic)
                         : normal_two_sided_p(ranks, result.statistic);
  return result;
}

EvalReport summarize(const std::vector<MethodRunResults>& runs,
                     const Eigen::VectorXd& actuals,
                     const std::vector<DriftLabel>& labels,
                     int periods_per_year) {
  if (runs.empty()) throw std::invalid_argument("summarize: no methods");
  if (labels.size() != static_cast<std::size_t>(actuals.size())) {
    throw std::invalid_argument("summarize: labels/actuals length mismatch");
  }
  for (const MethodRunResults& run : runs) {
    if (run.per_seed_predictions.empty()) {
      throw std::invalid_argument("summarize: method " + run.method +
                                  " has no seeds");
    }
    for (const Eigen::VectorXd& preds : run.per_seed_predictions) {
      if (preds.size() != actuals.size()) {
        throw std::invalid_argument("summarize: prediction shape mismatch in " +
                                    run.method);
      }
    }
  }

  EvalReport report;
  report.periods_per_year = periods_per_year;
  std::vector<std::pair<std::string, Eigen::VectorXd>> regime_input;
  for (const MethodRunResults& run : runs) {
    MethodSummary summary;
    summary.method = run.method;
    summary.per_step_mae = seed_averaged(run.per_seed_predictions, actuals, false);
    summary.per_step_mape = seed_averaged(run.per_seed_predictions, actuals, true);
    summary.mae_mean = summary.per_step_mae.mean();
    summary.mae_std = population_std(summary.per_step_mae);
    summary.mape_mean = summary.per_step_mape.mean();
    summary.mape_std = population_std(summary.per_step_mape);
    regime_input.emplace_back(run.method, summary.per_step_mape);
    report.methods.push_back(std::move(summary));
  }

  for (std::size_t i = 0; i < report.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < report.methods.size(); ++j) {
      PairwiseTest test;
      test.method_a = report.methods[i].method;
      test.method_b = report.methods[j].method;
      try {
        WilcoxonResult w = wilcoxon_signed_rank(report.methods[i].per_step_mape,
                                                report.methods[j].per_step_mape);
        test.statistic = w.statistic;
        test.p_value = w.p_value;
      } catch (const std::invalid_argument& e) {
        test.note = e.what();
      }
      report.pairwise.push_back(std::move(test));
    }
  }

  report.regime = per_regime_report(regime_input, labels);

  report.reference_method = report.methods.front().method;
  for (const MethodSummary& m : report.methods) {
    if (m.method == "SA") {
      report.reference_method = m.method;
      break;
    }
  }
  double reference_mae = 0.0;
  for (const MethodSummary& m : report.methods) {
    if (m.method == report.reference_method) reference_mae = m.mae_mean;
  }
  for (const MethodSummary& m : report.methods) {
    if (m.method == report.reference_method) continue;
    MealsRow row;
    row.method = m.method;
    row.mae_delta = reference_mae - m.mae_mean;
    row.annual_meals =
        meals_equivalent(row.mae_delta * static_cast<double>(periods_per_year));
    report.meals.push_back(std::move(row));
  }
  return report;
}

void write_report_json(const EvalReport& report,
                       const std::filesystem::path& path) {
  ordered_json j;
  j["reference_method"] = report.reference_method;
  j["periods_per_year"] = report.periods_per_year;
  j["methods"] = ordered_json::array();
  for (const MethodSummary& m : report.methods) {
    ordered_json jm;
    jm["method"] = m.method;
    jm["mae_mean"] = m.mae_mean;
    jm["mae_std"] = m.mae_std;
    jm["mape_mean"] = m.mape_mean;
    jm["mape_std"] = m.mape_std;
    jm["per_step_mae"] = std::vector<double>(m.per_step_mae.begin(),
                                             m.per_step_mae.end());
    jm["per_step_mape"] = std::vector<double>(m.per_step_mape.begin(),
                                              m.per_step_mape.end());
    j["methods"].push_back(std::move(jm));
  }
  j["pairwise"] = ordered_json::array();
  for (const PairwiseTest& t : report.pairwise) {
    ordered_json jt;
    jt["method_a"] = t.method_a;
    jt["method_b"] = t.method_b;
    if (t.note.empty()) {
      jt["statistic"] = t.statistic;
      jt["p_value"] = t.p_value;
    } else {
      jt["note"] = t.note;
    }
    j["pairwise"].push_back(std::move(jt));
  }
  j["regime"] = ordered_json::object();
  for (const auto& [label, row] : report.regime.rows) {
    ordered_json jr;
    for (const auto& [method, cell] : row) {
      jr[method] = {{"mean_mape", cell.mean_mape},
                    {"std_mape", cell.std_mape},
                    {"steps", cell.count}};
    }
    j["regime"][to_string(label)] = std::move(jr);
  }
  j["meals_vs_reference"] = ordered_json::array();
  for (const MealsRow& row : report.meals) {
    j["meals_vs_reference"].push_back({{"method", row.method},
                                       {"mae_delta_lb", row.mae_delta},
                                       {"annual_meals", row.annual_meals}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << j.dump(2) << '\n';
}

void write_report_markdown(const EvalReport& report,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  char buf[128];

  out << "# Evaluation report\n\n## Overall performance\n\n";
  out << "| Method | MAE (lb) | MAPE (%) |\n|---|---|---|\n";
  for (const MethodSummary& m : report.methods) {
    std::snprintf(buf, sizeof(buf), "| %s | %.0f ± %.0f | %.2f ± %.2f |",
                  m.method.c_str(), m.mae_mean, m.mae_std, m.mape_mean,
                  m.mape_std);
    out << buf << '\n';
  }

  out << "\n## Average MAPE by drift regime\n\n| Regime |";
  for (const std::string& method : report.regime.methods) out << ' ' << method << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < report.regime.methods.size(); ++i) out << "---|";
  out << '\n';
  for (DriftLabel label : all_drift_labels()) {
    auto it = report.regime.rows.find(label);
    if (it == report.regime.rows.end()) continue;
    out << "| " << to_string(label) << " |";
    for (const std::string& method : report.regime.methods) {
      auto mit = it->second.find(method);
      if (mit == it->second.end()) {
        out << " |";
      } else {
        std::snprintf(buf, sizeof(buf), " %.2f ± %.2f |", mit->second.mean_mape,
                      mit->second.std_mape);
        out << buf;
      }
    }
    out << '\n';
  }

  out << "\n## Pairwise Wilcoxon signed-rank (per-step MAPE)\n\n"
      << "| Pair | W | two-sided p |\n|---|---|---|\n";
  for (const PairwiseTest& t : report.pairwise) {
    if (t.note.empty()) {
      std::snprintf(buf, sizeof(buf), "| %s vs %s | %.1f | %.4f |",
                    t.method_a.c_str(), t.method_b.c_str(), t.statistic,
                    t.p_value);
      out << buf << '\n';
    } else {
      out << "| " << t.method_a << " vs " << t.method_b << " | - | " << t.note
          << " |\n";
    }
  }

  out << "\n## Annualized meals equivalent vs " << report.reference_method
      << "\n\n| Method | ΔMAE (lb) | meals/year |\n|---|---|---|\n";
  for (const MealsRow& row : report.meals) {
    std::snprintf(buf, sizeof(buf), "| %s | %.0f | %.0f |", row.method.c_str(),
                  row.mae_delta, row.annual_meals);
    out << buf << '\n';
  }
}

void write_per_step_csv(const EvalReport& report,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write per-step csv: " + path.string());
  out << "step";
  for (const MethodSummary& m : report.methods) {
    out << ',' << m.method << "_mae," << m.method << "_mape";
  }
  out << '\n';
  out.precision(17);
  const Eigen::Index n =
      report.methods.empty() ? 0 : report.methods.front().per_step_mae.size();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (static_cast<std::size_t>(t) < report.step_names.size()) {
      out << report.step_names[static_cast<std::size_t>(t)];
    } else {
      out << t;
    }
    for (const MethodSummary& m : report.methods) {
      out << ',' << m.per_step_mae(t) << ',' << m.per_step_mape(t);
    }
    out << '\n';
  }
}

}  // namespace foodcast
