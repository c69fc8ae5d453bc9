#include "foodcast/drift_segment.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "foodcast/model_cluster.hpp"
#include "foodcast/stats.hpp"

namespace foodcast {

Eigen::VectorXd drift_features(const DonationSeries& series) {
  const Eigen::Index n = series.size();
  if (n < 2) {
    throw std::invalid_argument("drift_features: need at least 2 steps");
  }
  Eigen::VectorXd descriptors(n);
  descriptors(0) = 0.0;
  for (Eigen::Index t = 1; t < n; ++t) {
    descriptors(t) = 100.0 * (series.values()(t) - series.values()(t - 1)) /
                     series.values()(t - 1);
  }
  return descriptors;
}

std::vector<DriftLabel> label_drift(const DonationSeries& series,
                                    std::uint64_t seed) {
  Eigen::VectorXd descriptors = drift_features(series);
  std::set<double> distinct(descriptors.begin(), descriptors.end());
  if (distinct.size() < static_cast<std::size_t>(kDriftLabelCount)) {
    throw std::invalid_argument(
        "label_drift: need at least 5 distinct descriptors, got " +
        std::to_string(distinct.size()));
  }

  Eigen::MatrixXd points = descriptors;  // N x 1
  ClusterAssignment clusters = kmeans(points, kDriftLabelCount, seed);

  // Name clusters by ascending centroid so labels are invariant to the
  // internal cluster ids.
  std::vector<int> order(kDriftLabelCount);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return clusters.centroids(a, 0) < clusters.centroids(b, 0);
  });
  std::vector<DriftLabel> by_cluster(kDriftLabelCount);
  for (int rank = 0; rank < kDriftLabelCount; ++rank) {
    by_cluster[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] =
        all_drift_labels()[static_cast<std::size_t>(rank)];
  }

  std::vector<DriftLabel> labels;
  labels.reserve(clusters.assignment.size());
  for (int c : clusters.assignment) {
    labels.push_back(by_cluster[static_cast<std::size_t>(c)]);
  }
  return labels;
}

RegimeReport per_regime_report(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& per_step_mape,
    const std::vector<DriftLabel>& labels) {
  RegimeReport report;
  for (const auto& [method, series] : per_step_mape) {
    if (series.size() != static_cast<Eigen::Index>(labels.size())) {
      throw std::invalid_argument("per_regime_report: length mismatch for " +
                                  method);
    }
    report.methods.push_back(method);
    for (DriftLabel label : all_drift_labels()) {
      std::vector<double> values;
      for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == label) {
          values.push_back(series(static_cast<Eigen::Index>(t)));
        }
      }
      if (values.empty()) continue;  // omitted, not zero
      Eigen::Map<const Eigen::VectorXd> v(values.data(),
                                          static_cast<Eigen::Index>(values.size()));
      RegimeCell cell;
      cell.mean_mape = v.mean();
      cell.std_mape = population_std(v);
      cell.count = v.size();
      report.rows[label][method] = cell;
    }
  }
  return report;
}

void write_regime_report_csv(const RegimeReport& report,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << "regime";
  for (const std::string& method : report.methods) out << ',' << method;
  out << '\n';
  char cell[64];
  for (DriftLabel label : all_drift_labels()) {
    auto it = report.rows.find(label);
    if (it == report.rows.end()) continue;
    out << to_string(label);
    for (const std::string& method : report.methods) {
      out << ',';
      auto mit = it->second.find(method);
      if (mit != it->second.end()) {
        std::snprintf(cell, sizeof(cell), "%.2f +- %.2f",
                      mit->second.mean_mape, mit->second.std_mape);
        out << cell;
      }
    }
    out << '\n';
  }
}

void write_labels_csv(const DonationSeries& series,
                      const std::vector<DriftLabel>& labels,
                      const std::filesystem::path& path) {
  if (labels.size() != static_cast<std::size_t>(series.size())) {
    throw std::invalid_argument("write_labels_csv: label count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write labels: " + path.string());
  out << "period,regime\n";
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    out << series.period_string(t) << ','
        << to_string(labels[static_cast<std::size_t>(t)]) << '\n';
  }
}

}  // namespace foodcast
