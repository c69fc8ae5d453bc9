#include "foodcast/feature_extract.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "foodcast/stats.hpp"

namespace foodcast {

FeatureVector extract_features(const Eigen::VectorXd& history,
                               const std::vector<int>& windows) {
  if (windows.empty()) {
    throw std::invalid_argument("extract_features: no windows");
  }
  FeatureVector out;
  out.windows = windows;
  out.names.reserve(windows.size() * feature_stat_names().size());
  out.values.resize(static_cast<Eigen::Index>(windows.size()) *
                    static_cast<Eigen::Index>(feature_stat_names().size()));

  Eigen::Index idx = 0;
  for (int w : windows) {
    if (w < 1) throw std::invalid_argument("extract_features: window < 1");
    for (const std::string& stat : feature_stat_names()) {
      out.names.push_back(stat + "_w" + std::to_string(w));
    }
    const Eigen::Index m = std::min<Eigen::Index>(w, history.size());
    if (m == 0) {
      out.values.segment(idx, 6).setZero();
      idx += 6;
      continue;
    }
    Eigen::VectorXd tail = history.tail(m);
    std::vector<double> deltas;
    deltas.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 1; i < m; ++i) deltas.push_back(tail(i) - tail(i - 1));

    out.values(idx + 0) = tail.mean();
    out.values(idx + 1) = tail.maxCoeff();
    out.values(idx + 2) = population_std(tail);
    out.values(idx + 3) = index_slope(tail);
    if (deltas.empty()) {
      out.values(idx + 4) = 0.0;
      out.values(idx + 5) = 0.0;
    } else {
      double sum = 0.0;
      for (double d : deltas) sum += d;
      out.values(idx + 4) = sum / static_cast<double>(deltas.size());
      out.values(idx + 5) = median(deltas);
    }
    idx += 6;
  }
  return out;
}

FeatureTable build_feature_table(const DonationSeries& series,
                                 const std::vector<int>& windows) {
  FeatureTable table;
  table.steps = series.timestamps();
  table.frequency = series.frequency();
  table.windows = windows;
  const Eigen::Index n = series.size();
  for (Eigen::Index t = 0; t < n; ++t) {
    FeatureVector fv = extract_features(series.values().head(t), windows);
    if (t == 0) {
      table.names = fv.names;
      table.rows.resize(n, fv.values.size());
    }
    table.rows.row(t) = fv.values.transpose();
  }
  return table;
}

std::vector<int> default_feature_windows(Frequency frequency) {
  if (frequency == Frequency::monthly) return {2, 4, 6, 12};
  return {2, 6, 12, 26, 38, 52};
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) {
    throw std::invalid_argument("feature scaler: column mismatch");
  }
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    if (std_dev(j) > 0.0) {
      out.col(j) = (rows.col(j).array() - mean(j)) / std_dev(j);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

FeatureScaler fit_feature_scaler(const FeatureTable& table,
                                 Eigen::Index train_rows) {
  if (train_rows < 1 || train_rows > table.rows.rows()) {
    throw std::invalid_argument("feature scaler: bad train_rows");
  }
  FeatureScaler scaler;
  const auto train = table.rows.topRows(train_rows);
  scaler.mean = train.colwise().mean();
  scaler.std_dev.resize(train.cols());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    scaler.std_dev(j) = population_std(train.col(j));
  }
  return scaler;
}

void write_feature_table_csv(const FeatureTable& table,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write features: " + path.string());
  out << "period";
  for (const std::string& name : table.names) out << ',' << name;
  out << '\n';
  out.precision(17);
  for (Eigen::Index t = 0; t < table.rows.rows(); ++t) {
    out << format_period(table.steps[static_cast<std::size_t>(t)],
                         table.frequency);
    for (Eigen::Index j = 0; j < table.rows.cols(); ++j) {
      out << ',' << table.rows(t, j);
    }
    out << '\n';
  }
}

}  // namespace foodcast
