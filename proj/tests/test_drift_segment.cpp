#include <doctest.h>

#include <map>

#include "foodcast/drift_segment.hpp"
#include "foodcast/synth_data.hpp"

using namespace foodcast;

namespace {

DonationSeries series_from(std::vector<double> values) {
  std::vector<Period> timestamps;
  Period p{2010, 1};
  for (std::size_t i = 0; i < values.size(); ++i) {
    timestamps.push_back(p);
    p = next_period(p, Frequency::monthly);
  }
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
  return DonationSeries(Frequency::monthly, std::move(timestamps), std::move(v));
}

}  // namespace

TEST_CASE("drift descriptors are one-step percent changes") {
  Eigen::VectorXd d = drift_features(series_from({100, 110, 110, 55}));
  CHECK(d(0) == 0.0);
  CHECK(d(1) == doctest::Approx(10.0));
  CHECK(d(2) == doctest::Approx(0.0));
  CHECK(d(3) == doctest::Approx(-50.0));
}

TEST_CASE("five singleton descriptors label in centroid order") {
  // Percent changes: -50, +125, -10, +22.2, +4.5 -> five distinct points.
  DonationSeries series = series_from({100, 50, 112.5, 101.25, 123.75, 129.375});
  std::vector<DriftLabel> labels = label_drift(series, 3);
  REQUIRE(labels.size() == 6);
  // Descriptors: [0, -50, +125, -10, +22.2, +4.6].
  CHECK(labels[1] == DriftLabel::extreme_decline);
  CHECK(labels[2] == DriftLabel::extreme_increase);
  CHECK(labels[3] == DriftLabel::moderate_decline);
  CHECK(labels[4] == DriftLabel::moderate_increase);
}

TEST_CASE("constant series cannot be labeled") {
  std::vector<double> flat(20, 100.0);
  CHECK_THROWS_WITH_AS(label_drift(series_from(flat), 1),
                       doctest::Contains("distinct"), std::invalid_argument);
}

TEST_CASE("label means are ordered by construction") {
  ScenarioConfig config;
  config.length = 120;
  config.base_level = 1e6;
  config.seasonal_amplitude = 0.1;
  config.noise_std = 0.06;
  config.shocks = {{ShockKind::spike_decay, 40, 0.5, 2, 1},
                   {ShockKind::step_decline, 80, -0.3, 1, 5}};
  config.seed = 14;
  DonationSeries series = generate(config);
  std::vector<DriftLabel> labels = label_drift(series, 5);
  Eigen::VectorXd descriptors = drift_features(series);

  std::map<DriftLabel, std::pair<double, int>> sums;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    sums[labels[t]].first += descriptors(static_cast<Eigen::Index>(t));
    sums[labels[t]].second += 1;
  }
  double previous = -1e300;
  for (DriftLabel label : all_drift_labels()) {
    if (!sums.count(label)) continue;
    double mean = sums[label].first / sums[label].second;
    CHECK(mean >= previous);
    previous = mean;
  }
}

TEST_CASE("spike steps are labeled extreme_increase across seeds") {
  int agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ScenarioConfig config;
    config.length = 100;
    config.base_level = 1e6;
    config.seasonal_amplitude = 0.06;
    config.noise_std = 0.03;
    config.shocks = {{ShockKind::spike_decay, 30, 0.50, 2, 1},
                     {ShockKind::spike_decay, 70, 0.55, 2, 1},
                     {ShockKind::step_decline, 50, -0.15, 1, 4}};
    config.seed = 1000 + seed;
    DonationSeries series = generate(config);
    std::vector<DriftLabel> labels = label_drift(series, seed);
    const auto& truth = *series.regime_truth();
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (truth[t] != DriftLabel::extreme_increase) continue;
      ++total;
      if (labels[t] == DriftLabel::extreme_increase) ++agree;
    }
  }
  REQUIRE(total >= 10);
  CHECK(agree >= (total * 8) / 10);
}

TEST_CASE("per-regime report groups mean and std") {
  std::vector<DriftLabel> labels = {DriftLabel::slight_trend,
                                    DriftLabel::slight_trend,
                                    DriftLabel::extreme_decline};
  Eigen::VectorXd mapes(3);
  mapes << 10, 20, 30;
  RegimeReport report = per_regime_report({{"SA", mapes}}, labels);

  const RegimeCell& slight = report.rows.at(DriftLabel::slight_trend).at("SA");
  CHECK(slight.mean_mape == doctest::Approx(15.0));
  CHECK(slight.std_mape == doctest::Approx(5.0));
  CHECK(slight.count == 2);
  CHECK(report.rows.at(DriftLabel::extreme_decline).at("SA").mean_mape ==
        doctest::Approx(30.0));
  // Regimes with no steps are omitted entirely.
  CHECK_FALSE(report.rows.count(DriftLabel::moderate_increase));

  // Identical methods produce identical rows.
  RegimeReport two = per_regime_report({{"A", mapes}, {"B", mapes}}, labels);
  CHECK(two.rows.at(DriftLabel::slight_trend).at("A").mean_mape ==
        two.rows.at(DriftLabel::slight_trend).at("B").mean_mape);

  Eigen::VectorXd wrong(2);
  wrong << 1, 2;
  CHECK_THROWS(per_regime_report({{"SA", wrong}}, labels));
}
