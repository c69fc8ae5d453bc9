#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace foodcast {

/// Population standard deviation of a dense vector expression.
template <typename Derived>
typename Derived::Scalar population_std(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) return Scalar(0);
  Scalar mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / Scalar(v.size()));
}

/// Least-squares slope of v against its 0-based index. Zero for size < 2.
template <typename Derived>
typename Derived::Scalar index_slope(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  if (n < 2) return Scalar(0);
  Scalar x_mean = Scalar(n - 1) / Scalar(2);
  Scalar y_mean = v.mean();
  Scalar num = 0, den = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar dx = Scalar(i) - x_mean;
    num += dx * (v(i) - y_mean);
    den += dx * dx;
  }
  return num / den;
}

/// Median of a copy of the values; averages the middle pair for even counts.
inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + upper);
}

/// Numerically stable softmax. -inf entries map to exactly zero weight.
template <typename Derived>
Eigen::VectorXd softmax(const Eigen::MatrixBase<Derived>& logits) {
  Eigen::VectorXd z = logits;
  double m = z.maxCoeff();
  Eigen::VectorXd e(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    e(i) = std::isinf(z(i)) && z(i) < 0 ? 0.0 : std::exp(z(i) - m);
  }
  double s = e.sum();
  return e / s;
}

/// CDF of the standard normal distribution.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace foodcast
