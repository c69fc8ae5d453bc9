#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foodcast/core_series.hpp"

namespace foodcast {

enum class ShockKind { spike_decay, step_decline, level_shift };

std::string to_string(ShockKind k);
ShockKind shock_kind_from_string(const std::string& s);

/// One disruption in the generated signal. `magnitude` is a signed fraction
/// of the base level; `start` is a 1-based step.
struct ShockSpec {
  ShockKind kind = ShockKind::spike_decay;
  int start = 1;
  double magnitude = 0.0;
  int decay_halflife = 1;  // spike_decay only
  int duration = 1;        // step_decline only
};

/// Parameters of one synthetic donation-like series.
struct ScenarioConfig {
  Frequency frequency = Frequency::monthly;
  int length = 0;
  double base_level = 0.0;
  double seasonal_amplitude = 0.0;
  double noise_std = 0.0;
  std::vector<ShockSpec> shocks;
  std::uint64_t seed = 0;
  Period start = {2007, 1};
};

struct NamedScenario {
  std::string name;
  ScenarioConfig config;
};

/// Generator truth thresholds on one-step percent change of the noise-free
/// signal: |pc| <= 5 slight, 5 < |pc| <= 20 moderate, |pc| > 20 extreme.
inline constexpr double kSlightThresholdPct = 5.0;
inline constexpr double kExtremeThresholdPct = 20.0;

/// Shock contribution at 1-based step t, as a fraction of base.
double shock_value(const ShockSpec& shock, int t);

/// Noise-free signal value at 1-based step t (seasonality + shocks, floored).
double signal_value(const ScenarioConfig& config, int t);

/// Generates the series (SplitMix64-seeded Gaussian noise, floor at
/// 0.05 * base) with regime_truth labels derived from the noise-free signal.
DonationSeries generate(const ScenarioConfig& config);

/// The canonical benchmark scenarios ("east"/"west", monthly and weekly)
/// with every scenario's seed field set from `seed`.
std::vector<NamedScenario> benchmark_suite(std::uint64_t seed);

/// Scenario config file round-trip (JSON).
ScenarioConfig load_scenario(const std::filesystem::path& path);
void write_scenario(const ScenarioConfig& config,
                    const std::filesystem::path& path);

/// Sibling `period,regime` CSV for a series carrying regime truth.
void write_regime_truth(const DonationSeries& series,
                        const std::filesystem::path& path);

}  // namespace foodcast
