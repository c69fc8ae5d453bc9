#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "foodcast/synth_data.hpp"

using namespace foodcast;
namespace fs = std::filesystem;

namespace {

int count_label(const DonationSeries& series, DriftLabel label,
                Eigen::Index from = 0) {
  REQUIRE(series.regime_truth().has_value());
  int n = 0;
  for (std::size_t t = static_cast<std::size_t>(from);
       t < series.regime_truth()->size(); ++t) {
    if ((*series.regime_truth())[t] == label) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("degenerate config yields a constant series") {
  ScenarioConfig config;
  config.length = 24;
  config.base_level = 1e6;
  config.seasonal_amplitude = 0.0;
  config.noise_std = 0.0;
  config.seed = 7;
  DonationSeries series = generate(config);
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    CHECK(series.values()(t) == doctest::Approx(1e6));
    CHECK((*series.regime_truth())[static_cast<std::size_t>(t)] ==
          DriftLabel::slight_trend);
  }
}

TEST_CASE("spike decay follows the closed-form signal") {
  ScenarioConfig config;
  config.length = 80;
  config.base_level = 1e6;
  config.seasonal_amplitude = 0.12;
  config.noise_std = 0.0;
  config.shocks = {{ShockKind::spike_decay, 50, 0.6, 5, 1}};
  config.seed = 1;
  DonationSeries series = generate(config);

  auto seasonal = [&](int t) {
    return 0.12 * std::sin(2.0 * std::numbers::pi * t / 12.0);
  };
  CHECK(series.values()(49) ==
        doctest::Approx(1e6 * (1.0 + seasonal(50) + 0.6)));
  // Shock contribution halves every 5 steps.
  double shock_at_55 = (series.values()(54) / 1e6) - 1.0 - seasonal(55);
  CHECK(shock_at_55 == doctest::Approx(0.3).epsilon(1e-9));
  double shock_at_60 = (series.values()(59) / 1e6) - 1.0 - seasonal(60);
  CHECK(shock_at_60 == doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("generation is deterministic per seed") {
  ScenarioConfig config;
  config.length = 60;
  config.base_level = 2e6;
  config.seasonal_amplitude = 0.1;
  config.noise_std = 0.08;
  config.shocks = {{ShockKind::step_decline, 20, -0.3, 1, 4}};
  config.seed = 42;
  DonationSeries a = generate(config);
  DonationSeries b = generate(config);
  CHECK(a == b);

  config.seed = 43;
  DonationSeries c = generate(config);
  CHECK_FALSE(a.values() == c.values());
}

TEST_CASE("floor clamp keeps values positive under huge negative shocks") {
  ScenarioConfig config;
  config.length = 30;
  config.base_level = 1e6;
  config.noise_std = 0.2;
  config.shocks = {{ShockKind::level_shift, 10, -2.5, 1, 1}};
  config.seed = 11;
  DonationSeries series = generate(config);
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    CHECK(series.values()(t) >= 0.05 * 1e6 - 1e-9);
    CHECK(series.values()(t) > 0.0);
  }
}

TEST_CASE("extreme-label fraction is monotone in shock magnitude") {
  auto extreme_count = [](double magnitude) {
    ScenarioConfig config;
    config.length = 100;
    config.base_level = 1e6;
    config.noise_std = 0.0;
    config.shocks = {{ShockKind::step_decline, 30, magnitude, 1, 5},
                     {ShockKind::step_decline, 60, magnitude, 1, 5}};
    config.seed = 5;
    DonationSeries series = generate(config);
    return count_label(series, DriftLabel::extreme_decline) +
           count_label(series, DriftLabel::extreme_increase);
  };
  CHECK(extreme_count(-0.10) == 0);
  CHECK(extreme_count(-0.25) >= extreme_count(-0.10));
  CHECK(extreme_count(-0.50) >= extreme_count(-0.25));
  CHECK(extreme_count(-0.50) > 0);
}

TEST_CASE("shock validation") {
  ScenarioConfig config;
  config.length = 10;
  config.base_level = 1e6;
  config.shocks = {{ShockKind::spike_decay, 50, 0.6, 5, 1}};  // start > N
  CHECK_THROWS(generate(config));
  config.shocks = {{ShockKind::spike_decay, 5, 0.0, 5, 1}};  // zero magnitude
  CHECK_THROWS(generate(config));
  config.shocks.clear();
  config.base_level = -1.0;
  CHECK_THROWS(generate(config));
}

TEST_CASE("benchmark suite profiles") {
  std::vector<NamedScenario> suite = benchmark_suite(9);
  CHECK(suite.size() >= 4);

  const ScenarioConfig* east = nullptr;
  const ScenarioConfig* west = nullptr;
  for (const NamedScenario& s : suite) {
    DonationSeries series = generate(s.config);
    CHECK(series.size() == s.config.length);  // passes DonationSeries validation
    if (s.name == "east_monthly") east = &s.config;
    if (s.name == "west_monthly") west = &s.config;
  }
  REQUIRE(east != nullptr);
  REQUIRE(west != nullptr);

  // West is decline-heavy relative to east at equal seeds.
  DonationSeries east_series = generate(*east);
  DonationSeries west_series = generate(*west);
  CHECK(count_label(west_series, DriftLabel::extreme_decline) >
        count_label(east_series, DriftLabel::extreme_decline));

  // The held-out two years of the west profile must contain decline
  // regimes so drift-conditioned evaluation has support.
  Eigen::Index test_start = west_series.size() - 24;
  int test_declines =
      count_label(west_series, DriftLabel::extreme_decline, test_start) +
      count_label(west_series, DriftLabel::moderate_decline, test_start);
  CHECK(test_declines >= 3);
}

TEST_CASE("scenario config round trips through json") {
  std::vector<NamedScenario> suite = benchmark_suite(21);
  fs::path dir = fs::temp_directory_path() / "foodcast_tests";
  fs::create_directories(dir);
  for (const NamedScenario& s : suite) {
    fs::path path = dir / (s.name + "_roundtrip.json");
    write_scenario(s.config, path);
    ScenarioConfig loaded = load_scenario(path);
    CHECK(generate(loaded) == generate(s.config));
  }
}

TEST_CASE("checked-in scenario configs match the built-in suite") {
  fs::path configs = fs::path(FOODCAST_SOURCE_DIR) / "configs" / "scenarios";
  for (const NamedScenario& s : benchmark_suite(1234)) {
    fs::path path = configs / (s.name + ".json");
    REQUIRE_MESSAGE(fs::exists(path), path.string());
    ScenarioConfig loaded = load_scenario(path);
    CHECK(generate(loaded) == generate(s.config));
  }
}
