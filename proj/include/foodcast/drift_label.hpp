#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace foodcast {

/// The five movement regimes, ordered by severity of the step-to-step change.
enum class DriftLabel {
  extreme_decline = 0,
  moderate_decline = 1,
  slight_trend = 2,
  moderate_increase = 3,
  extreme_increase = 4,
};

inline constexpr int kDriftLabelCount = 5;

inline const std::array<DriftLabel, kDriftLabelCount>& all_drift_labels() {
  static const std::array<DriftLabel, kDriftLabelCount> labels = {
      DriftLabel::extreme_decline, DriftLabel::moderate_decline,
      DriftLabel::slight_trend, DriftLabel::moderate_increase,
      DriftLabel::extreme_increase};
  return labels;
}

inline std::string to_string(DriftLabel label) {
  switch (label) {
    case DriftLabel::extreme_decline: return "extreme_decline";
    case DriftLabel::moderate_decline: return "moderate_decline";
    case DriftLabel::slight_trend: return "slight_trend";
    case DriftLabel::moderate_increase: return "moderate_increase";
    case DriftLabel::extreme_increase: return "extreme_increase";
  }
  throw std::logic_error("unknown drift label");
}

inline DriftLabel drift_label_from_string(const std::string& s) {
  for (DriftLabel label : all_drift_labels()) {
    if (to_string(label) == s) return label;
  }
  throw std::invalid_argument("unknown drift label: " + s);
}

}  // namespace foodcast
