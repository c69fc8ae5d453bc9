#include "foodcast/synth_data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "foodcast/rng.hpp"

namespace foodcast {
namespace {

using ordered_json = nlohmann::ordered_json;

void validate(const ScenarioConfig& config) {
  if (config.length < 1) throw std::invalid_argument("scenario: length < 1");
  if (config.base_level <= 0.0)
    throw std::invalid_argument("scenario: base_level must be positive");
  if (config.seasonal_amplitude < 0.0 || config.noise_std < 0.0)
    throw std::invalid_argument("scenario: negative amplitude or noise");
  for (const ShockSpec& s : config.shocks) {
    if (s.start < 1 || s.start > config.length)
      throw std::invalid_argument("scenario: shock start outside [1, N]");
    if (s.magnitude == 0.0)
      throw std::invalid_argument("scenario: shock magnitude must be nonzero");
    if (s.kind == ShockKind::spike_decay && s.decay_halflife < 1)
      throw std::invalid_argument("scenario: decay_halflife must be >= 1");
    if (s.kind == ShockKind::step_decline && s.duration < 1)
      throw std::invalid_argument("scenario: duration must be >= 1");
  }
}

DriftLabel label_from_percent_change(double pc) {
  double mag = std::abs(pc);
  if (mag <= kSlightThresholdPct) return DriftLabel::slight_trend;
  if (mag <= kExtremeThresholdPct) {
    return pc > 0 ? DriftLabel::moderate_increase : DriftLabel::moderate_decline;
  }
  return pc > 0 ? DriftLabel::extreme_increase : DriftLabel::extreme_decline;
}

ordered_json shock_to_json(const ShockSpec& s) {
  ordered_json j;
  j["kind"] = to_string(s.kind);
  j["start"] = s.start;
  j["magnitude"] = s.magnitude;
  if (s.kind == ShockKind::spike_decay) j["decay_halflife"] = s.decay_halflife;
  if (s.kind == ShockKind::step_decline) j["duration"] = s.duration;
  return j;
}

ShockSpec shock_from_json(const ordered_json& j) {
  ShockSpec s;
  s.kind = shock_kind_from_string(j.at("kind").get<std::string>());
  s.start = j.at("start").get<int>();
  s.magnitude = j.at("magnitude").get<double>();
  if (j.contains("decay_halflife")) s.decay_halflife = j["decay_halflife"].get<int>();
  if (j.contains("duration")) s.duration = j["duration"].get<int>();
  return s;
}

}  // namespace

std::string to_string(ShockKind k) {
  switch (k) {
    case ShockKind::spike_decay: return "spike_decay";
    case ShockKind::step_decline: return "step_decline";
    case ShockKind::level_shift: return "level_shift";
  }
  throw std::logic_error("unknown shock kind");
}

ShockKind shock_kind_from_string(const std::string& s) {
  if (s == "spike_decay") return ShockKind::spike_decay;
  if (s == "step_decline") return ShockKind::step_decline;
  if (s == "level_shift") return ShockKind::level_shift;
  throw std::invalid_argument("unknown shock kind: " + s);
}

double shock_value(const ShockSpec& shock, int t) {
  if (t < shock.start) return 0.0;
  switch (shock.kind) {
    case ShockKind::spike_decay:
      return shock.magnitude *
             std::exp2(-static_cast<double>(t - shock.start) /
                       static_cast<double>(shock.decay_halflife));
    case ShockKind::step_decline:
      return t < shock.start + shock.duration ? shock.magnitude : 0.0;
    case ShockKind::level_shift:
      return shock.magnitude;
  }
  return 0.0;
}

double signal_value(const ScenarioConfig& config, int t) {
  const double period = periods_per_year(config.frequency);
  double seasonal = config.seasonal_amplitude *
                    std::sin(2.0 * std::numbers::pi * t / period);
  double shock = 0.0;
  for (const ShockSpec& s : config.shocks) shock += shock_value(s, t);
  double value = config.base_level * (1.0 + seasonal + shock);
  return std::max(value, 0.05 * config.base_level);
}

DonationSeries generate(const ScenarioConfig& config) {
  validate(config);
  SplitMix64 rng(config.seed);

  const double floor = 0.05 * config.base_level;
  Eigen::VectorXd values(config.length);
  std::vector<Period> timestamps;
  timestamps.reserve(config.length);
  std::vector<DriftLabel> truth;
  truth.reserve(config.length);

  Period p = config.start;
  double prev_signal = 0.0;
  for (int t = 1; t <= config.length; ++t) {
    double signal = signal_value(config, t);
    double noise = config.base_level * config.noise_std * rng.normal();
    values(t - 1) = std::max(signal + noise, floor);
    timestamps.push_back(p);
    p = next_period(p, config.frequency);

    if (t == 1) {
      truth.push_back(DriftLabel::slight_trend);
    } else {
      double pc = 100.0 * (signal - prev_signal) / prev_signal;
      truth.push_back(label_from_percent_change(pc));
    }
    prev_signal = signal;
  }
  return DonationSeries(config.frequency, std::move(timestamps),
                        std::move(values), std::move(truth));
}

std::vector<NamedScenario> benchmark_suite(std::uint64_t seed) {
  std::vector<NamedScenario> suite;

  // East profile: higher level, sparse large hurricane-style spikes, one
  // moderate decline window.
  ScenarioConfig east;
  east.frequency = Frequency::monthly;
  east.length = 160;
  east.base_level = 5.5e6;
  east.seasonal_amplitude = 0.12;
  east.noise_std = 0.04;
  east.shocks = {
      {ShockKind::spike_decay, 70, 0.55, 3, 1},
      {ShockKind::step_decline, 95, -0.12, 1, 6},
      {ShockKind::spike_decay, 118, 0.40, 2, 1},
      {ShockKind::level_shift, 130, 0.08, 1, 1},
  };
  east.seed = seed;
  suite.push_back({"east_monthly", east});

  // West profile: lower level, frequent extreme declines, including inside
  // the final two years so held-out evaluation sees decline regimes.
  ScenarioConfig west;
  west.frequency = Frequency::monthly;
  west.length = 160;
  west.base_level = 2.2e6;
  west.seasonal_amplitude = 0.08;
  west.noise_std = 0.05;
  west.shocks = {
      {ShockKind::step_decline, 30, -0.35, 1, 5},
      {ShockKind::step_decline, 55, -0.28, 1, 4},
      {ShockKind::spike_decay, 80, -0.30, 4, 1},
      // A persistent staircase decline inside the training years, so
      // sustained downturns are part of what learners are fit on.
      {ShockKind::step_decline, 100, -0.22, 1, 22},
      {ShockKind::step_decline, 106, -0.10, 1, 16},
      {ShockKind::step_decline, 112, -0.08, 1, 10},
      {ShockKind::step_decline, 126, -0.12, 1, 4},
      // Final two years: another staircase with no in-window recovery.
      {ShockKind::step_decline, 141, -0.30, 1, 20},
      {ShockKind::step_decline, 146, -0.10, 1, 15},
      {ShockKind::step_decline, 151, -0.10, 1, 10},
      {ShockKind::step_decline, 156, -0.08, 1, 5},
  };
  west.seed = seed;
  suite.push_back({"west_monthly", west});

  ScenarioConfig east_w;
  east_w.frequency = Frequency::weekly;
  east_w.length = 320;
  east_w.base_level = 1.3e6;
  east_w.seasonal_amplitude = 0.10;
  east_w.noise_std = 0.05;
  east_w.start = {2007, 1};
  east_w.shocks = {
      {ShockKind::spike_decay, 140, 0.45, 6, 1},
      {ShockKind::step_decline, 220, -0.15, 1, 10},
      {ShockKind::level_shift, 270, 0.06, 1, 1},
  };
  east_w.seed = seed;
  suite.push_back({"east_weekly", east_w});

  ScenarioConfig west_w;
  west_w.frequency = Frequency::weekly;
  west_w.length = 320;
  west_w.base_level = 5.0e5;
  west_w.seasonal_amplitude = 0.07;
  west_w.noise_std = 0.06;
  west_w.start = {2007, 1};
  west_w.shocks = {
      {ShockKind::step_decline, 60, -0.35, 1, 8},
      {ShockKind::spike_decay, 150, -0.30, 6, 1},
      {ShockKind::step_decline, 230, -0.30, 1, 8},
      {ShockKind::step_decline, 295, -0.28, 1, 6},
  };
  west_w.seed = seed;
  suite.push_back({"west_weekly", west_w});

  return suite;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path.string());
  ordered_json j = ordered_json::parse(in);
  ScenarioConfig config;
  config.frequency = frequency_from_string(j.at("frequency").get<std::string>());
  config.length = j.at("length").get<int>();
  config.base_level = j.at("base_level").get<double>();
  config.seasonal_amplitude = j.at("seasonal_amplitude").get<double>();
  config.noise_std = j.at("noise_std").get<double>();
  for (const auto& js : j.at("shocks")) config.shocks.push_back(shock_from_json(js));
  config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("start"))
    config.start = parse_period(j["start"].get<std::string>(), config.frequency);
  validate(config);
  return config;
}

void write_scenario(const ScenarioConfig& config,
                    const std::filesystem::path& path) {
  validate(config);
  ordered_json j;
  j["frequency"] = to_string(config.frequency);
  j["length"] = config.length;
  j["base_level"] = config.base_level;
  j["seasonal_amplitude"] = config.seasonal_amplitude;
  j["noise_std"] = config.noise_std;
  j["shocks"] = ordered_json::array();
  for (const ShockSpec& s : config.shocks) j["shocks"].push_back(shock_to_json(s));
  j["seed"] = config.seed;
  j["start"] = format_period(config.start, config.frequency);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario: " + path.string());
  out << j.dump(2) << '\n';
}

void write_regime_truth(const DonationSeries& series,
                        const std::filesystem::path& path) {
  if (!series.regime_truth()) {
    throw std::invalid_argument("series carries no regime truth");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write regimes: " + path.string());
  out << "period,regime\n";
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    out << series.period_string(t) << ','
        << to_string((*series.regime_truth())[static_cast<std::size_t>(t)])
        << '\n';
  }
}

}  // namespace foodcast
