#include <doctest.h>

#include "foodcast/feature_extract.hpp"
#include "foodcast/rng.hpp"
#include "foodcast/synth_data.hpp"

using namespace foodcast;

namespace {

double feature(const FeatureVector& fv, const std::string& name) {
  for (std::size_t i = 0; i < fv.names.size(); ++i) {
    if (fv.names[i] == name) return fv.values(static_cast<Eigen::Index>(i));
  }
  FAIL(("missing feature " + name));
  return 0.0;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("six statistics on a line") {
  FeatureVector fv = extract_features(vec({2, 4, 6}), {3});
  CHECK(feature(fv, "mean_w3") == doctest::Approx(4.0));
  CHECK(feature(fv, "max_w3") == doctest::Approx(6.0));
  CHECK(feature(fv, "slope_w3") == doctest::Approx(2.0));
  CHECK(feature(fv, "mean_diff_w3") == doctest::Approx(2.0));
  CHECK(feature(fv, "median_diff_w3") == doctest::Approx(2.0));
}

TEST_CASE("degenerate windows") {
  FeatureVector one = extract_features(vec({5}), {4});
  CHECK(feature(one, "mean_w4") == doctest::Approx(5.0));
  CHECK(feature(one, "max_w4") == doctest::Approx(5.0));
  CHECK(feature(one, "std_w4") == doctest::Approx(0.0));
  CHECK(feature(one, "slope_w4") == doctest::Approx(0.0));
  CHECK(feature(one, "mean_diff_w4") == doctest::Approx(0.0));
  CHECK(feature(one, "median_diff_w4") == doctest::Approx(0.0));

  FeatureVector flat = extract_features(vec({1, 1, 1, 1}), {4});
  CHECK(feature(flat, "std_w4") == doctest::Approx(0.0));
  CHECK(feature(flat, "slope_w4") == doctest::Approx(0.0));

  FeatureVector empty = extract_features(Eigen::VectorXd(0), {2, 4});
  CHECK(empty.values.isZero());
}

TEST_CASE("feature counts per frequency") {
  ScenarioConfig config;
  config.length = 30;
  config.base_level = 1e6;
  config.noise_std = 0.05;
  config.seed = 3;
  DonationSeries monthly = generate(config);
  FeatureTable table =
      build_feature_table(monthly, default_feature_windows(Frequency::monthly));
  CHECK(table.rows.cols() == 24);  // 6 stats x 4 windows

  config.frequency = Frequency::weekly;
  config.length = 80;
  DonationSeries weekly = generate(config);
  FeatureTable wtable =
      build_feature_table(weekly, default_feature_windows(Frequency::weekly));
  CHECK(wtable.rows.cols() == 36);  // 6 stats x 6 windows
}

TEST_CASE("features never read the future") {
  ScenarioConfig config;
  config.length = 50;
  config.base_level = 1e6;
  config.noise_std = 0.1;
  config.seed = 8;
  DonationSeries series = generate(config);
  FeatureTable table = build_feature_table(series, {2, 4, 6, 12});

  const Eigen::Index cut = 25;
  Eigen::VectorXd mutated = series.values();
  for (Eigen::Index t = cut; t < mutated.size(); ++t) mutated(t) = 7e5 + t;
  DonationSeries other(series.frequency(), series.timestamps(), mutated);
  FeatureTable table2 = build_feature_table(other, {2, 4, 6, 12});

  // Rows 0..cut use only values[0..cut-1], so they are bit-identical.
  for (Eigen::Index t = 0; t <= cut; ++t) {
    CHECK(table.rows.row(t) == table2.rows.row(t));
  }
  CHECK_FALSE(table.rows.row(cut + 1) == table2.rows.row(cut + 1));
}

TEST_CASE("shift and scale equivariance") {
  SplitMix64 rng(12);
  Eigen::VectorXd history(20);
  for (Eigen::Index i = 0; i < history.size(); ++i) {
    history(i) = 50.0 + 10.0 * rng.normal();
  }
  FeatureVector base = extract_features(history, {4, 12});

  const double shift = 17.5;
  FeatureVector shifted =
      extract_features((history.array() + shift).matrix(), {4, 12});
  for (std::size_t i = 0; i < base.names.size(); ++i) {
    const std::string& name = base.names[i];
    double expected = base.values(static_cast<Eigen::Index>(i));
    if (name.rfind("mean_w", 0) == 0 || name.rfind("max_w", 0) == 0) {
      expected += shift;
    }
    CHECK(shifted.values(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  const double scale = 3.25;
  FeatureVector scaled =
      extract_features((history.array() * scale).matrix(), {4, 12});
  for (Eigen::Index i = 0; i < base.values.size(); ++i) {
    CHECK(scaled.values(i) == doctest::Approx(scale * base.values(i)));
  }
}

TEST_CASE("scaler uses training statistics only") {
  ScenarioConfig config;
  config.length = 60;
  config.base_level = 1e6;
  config.noise_std = 0.07;
  config.seed = 2;
  DonationSeries series = generate(config);
  FeatureTable table = build_feature_table(series, {2, 6});

  FeatureScaler scaler = fit_feature_scaler(table, 40);
  Eigen::MatrixXd standardized = scaler.apply(table.rows);

  // Training rows have zero mean and unit variance per non-constant column.
  Eigen::MatrixXd train = standardized.topRows(40);
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    if (scaler.std_dev(j) > 0.0) {
      CHECK(train.col(j).mean() == doctest::Approx(0.0).epsilon(1e-9));
    } else {
      CHECK(train.col(j).isZero());
    }
  }

  // Mutating test-range values does not change the scaler.
  Eigen::VectorXd mutated = series.values();
  for (Eigen::Index t = 40; t < 60; ++t) mutated(t) *= 2.0;
  DonationSeries other(series.frequency(), series.timestamps(), mutated);
  FeatureTable table2 = build_feature_table(other, {2, 6});
  FeatureScaler scaler2 = fit_feature_scaler(table2, 40);
  CHECK(scaler.mean == scaler2.mean);
  CHECK(scaler.std_dev == scaler2.std_dev);
}
