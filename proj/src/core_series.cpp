#include "foodcast/core_series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace foodcast {
namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Day of week, 0 = Sunday (Sakamoto's method).
int day_of_week(int y, int m, int d) {
  static const int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
  if (m < 3) y -= 1;
  return (y + y / 4 - y / 100 + y / 400 + t[m - 1] + d) % 7;
}

}  // namespace

std::string to_string(Frequency f) {
  return f == Frequency::monthly ? "monthly" : "weekly";
}

Frequency frequency_from_string(const std::string& s) {
  if (s == "monthly") return Frequency::monthly;
  if (s == "weekly") return Frequency::weekly;
  throw std::invalid_argument("unknown frequency: " + s);
}

int weeks_in_iso_year(int year) {
  // 53-week years are exactly those where Jan 1 or Dec 31 is a Thursday.
  constexpr int kThursday = 4;
  return (day_of_week(year, 1, 1) == kThursday ||
          day_of_week(year, 12, 31) == kThursday)
             ? 53
             : 52;
}

Period parse_period(const std::string& text, Frequency frequency) {
  auto fail = [&]() {
    throw std::invalid_argument("malformed period '" + text + "' for " +
                                to_string(frequency) + " frequency");
  };
  auto dash = text.find('-');
  if (dash == std::string::npos) fail();
  int year = 0;
  if (!parse_int(std::string_view(text).substr(0, dash), year) || year < 1)
    fail();

  std::string_view rest = std::string_view(text).substr(dash + 1);
  Period p;
  p.year = year;
  if (frequency == Frequency::monthly) {
    if (rest.size() != 2 || !parse_int(rest, p.index)) fail();
    if (p.index < 1 || p.index > 12) fail();
  } else {
    if (rest.size() != 3 || rest[0] != 'W' || !parse_int(rest.substr(1), p.index))
      fail();
    if (p.index < 1 || p.index > weeks_in_iso_year(year)) fail();
  }
  return p;
}

std::string format_period(const Period& p, Frequency frequency) {
  char buf[16];
  if (frequency == Frequency::monthly) {
    std::snprintf(buf, sizeof(buf), "%04d-%02d", p.year, p.index);
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-W%02d", p.year, p.index);
  }
  return buf;
}

Period next_period(const Period& p, Frequency frequency) {
  int last = frequency == Frequency::monthly ? 12 : weeks_in_iso_year(p.year);
  if (p.index < last) return {p.year, p.index + 1};
  return {p.year + 1, 1};
}

DonationSeries::DonationSeries(
    Frequency frequency, std::vector<Period> timestamps, Eigen::VectorXd values,
    std::optional<std::vector<DriftLabel>> regime_truth)
    : frequency_(frequency),
      timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      regime_truth_(std::move(regime_truth)) {
  if (timestamps_.size() != static_cast<std::size_t>(values_.size())) {
    throw std::invalid_argument("series: timestamp/value length mismatch");
  }
  if (values_.size() == 0) {
    throw std::invalid_argument("series: empty");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_(i)) || values_(i) <= 0.0) {
      throw std::invalid_argument(
          "series: nonpositive or non-finite value at " +
          format_period(timestamps_[static_cast<std::size_t>(i)], frequency_));
    }
  }
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    Period expected = next_period(timestamps_[i - 1], frequency_);
    if (timestamps_[i] == timestamps_[i - 1]) {
      throw std::invalid_argument("series: duplicate period " +
                                  format_period(timestamps_[i], frequency_));
    }
    if (timestamps_[i] != expected) {
      throw std::invalid_argument(
          "series: gap between " +
          format_period(timestamps_[i - 1], frequency_) + " and " +
          format_period(timestamps_[i], frequency_) + " (expected " +
          format_period(expected, frequency_) + ")");
    }
  }
  if (regime_truth_ && regime_truth_->size() != timestamps_.size()) {
    throw std::invalid_argument("series: regime_truth length mismatch");
  }
}

bool DonationSeries::operator==(const DonationSeries& other) const {
  return frequency_ == other.frequency_ && timestamps_ == other.timestamps_ &&
         values_.size() == other.values_.size() && values_ == other.values_ &&
         regime_truth_ == other.regime_truth_;
}

DonationSeries load_series(const std::filesystem::path& path,
                           Frequency frequency) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open series file: " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<Period, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "period,pounds") {
        throw std::runtime_error(path.string() +
                                 ":1: expected header 'period,pounds'");
      }
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'period,pounds' row");
    }
    Period p;
    double value = 0.0;
    try {
      p = parse_period(line.substr(0, comma), frequency);
      std::size_t consumed = 0;
      value = std::stod(line.substr(comma + 1), &consumed);
      if (consumed != line.size() - comma - 1) {
        throw std::invalid_argument("trailing characters after value");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
    rows.emplace_back(p, value);
  }
  if (rows.empty()) {
    throw std::runtime_error(path.string() + ": no data rows");
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<Period> timestamps;
  timestamps.reserve(rows.size());
  Eigen::VectorXd values(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    timestamps.push_back(rows[i].first);
    values(static_cast<Eigen::Index>(i)) = rows[i].second;
  }
  return DonationSeries(frequency, std::move(timestamps), std::move(values));
}

void write_series(const DonationSeries& series,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write series file: " + path.string());
  }
  out << "period,pounds\n";
  out.precision(17);
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    out << series.period_string(t) << ',' << series.values()(t) << '\n';
  }
}

SeriesSplit split_train_test(const DonationSeries& series,
                             Eigen::Index test_periods) {
  const Eigen::Index n = series.size();
  if (test_periods <= 0 || test_periods >= n) {
    throw std::invalid_argument(
        "split_train_test: test_periods must be in (0, N); got " +
        std::to_string(test_periods) + " with N=" + std::to_string(n));
  }
  const Eigen::Index split = n - test_periods;
  auto slice_truth = [&](Eigen::Index begin, Eigen::Index count)
      -> std::optional<std::vector<DriftLabel>> {
    if (!series.regime_truth()) return std::nullopt;
    auto first = series.regime_truth()->begin() + begin;
    return std::vector<DriftLabel>(first, first + count);
  };
  std::vector<Period> train_ts(series.timestamps().begin(),
                               series.timestamps().begin() + split);
  std::vector<Period> test_ts(series.timestamps().begin() + split,
                              series.timestamps().end());
  DonationSeries train(series.frequency(), std::move(train_ts),
                       series.values().head(split), slice_truth(0, split));
  DonationSeries test(series.frequency(), std::move(test_ts),
                      series.values().tail(test_periods),
                      slice_truth(split, test_periods));
  return SeriesSplit{std::move(train), std::move(test), split};
}

}  // namespace foodcast
