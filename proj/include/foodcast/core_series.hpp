#pragma once

#include <Eigen/Dense>

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foodcast/drift_label.hpp"

namespace foodcast {

enum class Frequency { monthly, weekly };

std::string to_string(Frequency f);
Frequency frequency_from_string(const std::string& s);

/// Number of periods per year and per seasonal cycle.
inline int periods_per_year(Frequency f) {
  return f == Frequency::monthly ? 12 : 52;
}

/// One calendar period: a month (1..12) or an ISO week (1..52/53) of a year.
struct Period {
  int year = 0;
  int index = 0;

  auto operator<=>(const Period&) const = default;
};

/// Weeks in the ISO-8601 week-numbering year (52 or 53).
int weeks_in_iso_year(int year);

/// Parses "YYYY-MM" (monthly) or "YYYY-Www" (weekly); throws on malformed
/// input or out-of-range components.
Period parse_period(const std::string& text, Frequency frequency);

std::string format_period(const Period& p, Frequency frequency);

/// The immediately following period at the given frequency.
Period next_period(const Period& p, Frequency frequency);

/// Timestamped univariate donation-volume series in pounds.
///
/// Construction validates the full contract: timestamps strictly increasing
/// and gap-free at the declared frequency, values finite and strictly
/// positive, and (when present) one regime-truth label per step.
class DonationSeries {
 public:
  DonationSeries(Frequency frequency, std::vector<Period> timestamps,
                 Eigen::VectorXd values,
                 std::optional<std::vector<DriftLabel>> regime_truth = {});

  Frequency frequency() const { return frequency_; }
  const std::vector<Period>& timestamps() const { return timestamps_; }
  const Eigen::VectorXd& values() const { return values_; }
  const std::optional<std::vector<DriftLabel>>& regime_truth() const {
    return regime_truth_;
  }
  Eigen::Index size() const { return values_.size(); }

  std::string period_string(Eigen::Index t) const {
    return format_period(timestamps_[static_cast<std::size_t>(t)], frequency_);
  }

  bool operator==(const DonationSeries& other) const;

 private:
  Frequency frequency_;
  std::vector<Period> timestamps_;
  Eigen::VectorXd values_;
  std::optional<std::vector<DriftLabel>> regime_truth_;
};

/// Positional train/test partition of a series.
struct SeriesSplit {
  DonationSeries train;
  DonationSeries test;
  Eigen::Index split_index = 0;
};

/// Reads a `period,pounds` CSV, sorts rows by period, and validates the
/// result. Parse failures name the offending line number.
DonationSeries load_series(const std::filesystem::path& path,
                           Frequency frequency);

/// Writes the standard `period,pounds` CSV. load_series(write_series(s)) == s.
void write_series(const DonationSeries& series,
                  const std::filesystem::path& path);

/// Holds out exactly the final test_periods observations.
SeriesSplit split_train_test(const DonationSeries& series,
                             Eigen::Index test_periods);

/// Signed error, prediction minus actual.
inline double forecast_error(double prediction, double actual) {
  return prediction - actual;
}

}  // namespace foodcast
