#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "foodcast/core_series.hpp"

namespace foodcast {

/// Names of the six per-window statistics, in emission order.
inline const std::vector<std::string>& feature_stat_names() {
  static const std::vector<std::string> names = {
      "mean", "max", "std", "slope", "mean_diff", "median_diff"};
  return names;
}

/// Features for one step: an ordered (name, value) mapping shared across the
/// whole run.
struct FeatureVector {
  std::vector<std::string> names;  // "{stat}_w{w}" per window
  Eigen::VectorXd values;
  std::vector<int> windows;
};

/// Rolling-window statistics over the trailing min(w, len(history)) values
/// for each window w: mean, max, population std, least-squares slope over
/// the index, mean of consecutive deltas, median of consecutive deltas.
/// An empty history emits all-zero features.
FeatureVector extract_features(const Eigen::VectorXd& history,
                               const std::vector<int>& windows);

/// Per-step feature rows; row t uses only values[0, t).
struct FeatureTable {
  std::vector<Period> steps;
  Frequency frequency = Frequency::monthly;
  std::vector<std::string> names;
  std::vector<int> windows;
  Eigen::MatrixXd rows;  // steps x features
};

FeatureTable build_feature_table(const DonationSeries& series,
                                 const std::vector<int>& windows);

/// Default window sets: monthly {2,4,6,12}, weekly {2,6,12,26,38,52}.
std::vector<int> default_feature_windows(Frequency frequency);

/// Per-feature z-score statistics fit on the first train_rows rows only.
struct FeatureScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_dev;

  /// Columns with zero training variance map to zero.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
};

FeatureScaler fit_feature_scaler(const FeatureTable& table,
                                 Eigen::Index train_rows);

/// Inspection CSV: `period` plus one column per feature.
void write_feature_table_csv(const FeatureTable& table,
                             const std::filesystem::path& path);

}  // namespace foodcast
