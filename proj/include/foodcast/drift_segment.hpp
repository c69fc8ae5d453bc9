#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "foodcast/core_series.hpp"

namespace foodcast {

/// Grouped error statistics for one (regime, method) pair.
struct RegimeCell {
  double mean_mape = 0.0;
  double std_mape = 0.0;  // population
  Eigen::Index count = 0;
};

/// Per-regime error table; regimes with no steps are omitted.
struct RegimeReport {
  std::vector<std::string> methods;
  std::map<DriftLabel, std::map<std::string, RegimeCell>> rows;
};

/// Per-step change descriptor: percent change from the previous step;
/// step 1 is assigned 0.
Eigen::VectorXd drift_features(const DonationSeries& series);

/// K-means (k=5) labels over the change descriptors, named in ascending
/// centroid order from extreme_decline to extreme_increase.
std::vector<DriftLabel> label_drift(const DonationSeries& series,
                                    std::uint64_t seed);

/// Groups per-step MAPE series by drift label; lengths must match.
RegimeReport per_regime_report(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& per_step_mape,
    const std::vector<DriftLabel>& labels);

/// CSV shaped rows = regimes, columns = methods, cells = "mean +- std".
void write_regime_report_csv(const RegimeReport& report,
                             const std::filesystem::path& path);

/// `period,regime` CSV for arbitrary labels.
void write_labels_csv(const DonationSeries& series,
                      const std::vector<DriftLabel>& labels,
                      const std::filesystem::path& path);

}  // namespace foodcast
