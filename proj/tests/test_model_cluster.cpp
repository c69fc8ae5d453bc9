#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "foodcast/model_cluster.hpp"
#include "foodcast/rng.hpp"
#include "foodcast/synth_data.hpp"

using namespace foodcast;
namespace fs = std::filesystem;

namespace {

/// Exhaustive optimum of the 2-cluster within-cluster sum of squares.
double brute_force_two_cluster_inertia(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  REQUIRE(n <= 20);
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Eigen::RowVectorXd c0 = Eigen::RowVectorXd::Zero(points.cols());
    Eigen::RowVectorXd c1 = Eigen::RowVectorXd::Zero(points.cols());
    int n0 = 0, n1 = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        c0 += points.row(i);
        ++n0;
      } else {
        c1 += points.row(i);
        ++n1;
      }
    }
    c0 /= n0;
    c1 /= n1;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      sse += (points.row(i) - ((mask & (1u << i)) ? c0 : c1)).squaredNorm();
    }
    best = std::min(best, sse);
  }
  return best;
}

/// Independent mean-silhouette implementation (plain double loops).
double silhouette_oracle(const Eigen::MatrixXd& points,
                         const std::vector<int>& assignment, int k) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int c : assignment) ++counts[static_cast<std::size_t>(c)];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    int own = assignment[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] <= 1) continue;
    double a = 0.0;
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(assignment[static_cast<std::size_t>(j)])] +=
          (points.row(i) - points.row(j)).norm();
    }
    a = sums[static_cast<std::size_t>(own)] /
        (counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sums[static_cast<std::size_t>(c)] /
                          counts[static_cast<std::size_t>(c)]);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / n;
}

ForecastMatrix pool_matrix(Frequency freq, int length, const PoolConfig& pool,
                           std::uint64_t seed) {
  ScenarioConfig config;
  config.frequency = freq;
  config.length = length;
  config.base_level = 2e6;
  config.seasonal_amplitude = 0.1;
  config.noise_std = 0.06;
  config.shocks = {{ShockKind::step_decline, length / 3, -0.3, 1, 4}};
  config.seed = seed;
  DonationSeries series = generate(config);
  return build_forecast_matrix(series, enumerate_specs(pool, freq), 0);
}

}  // namespace

TEST_CASE("well-separated pairs cluster cleanly") {
  Eigen::MatrixXd points(4, 1);
  points << 0.0, 0.1, 10.0, 10.1;
  ClusterAssignment a = kmeans(points, 2, 3);
  CHECK(a.assignment[0] == a.assignment[1]);
  CHECK(a.assignment[2] == a.assignment[3]);
  CHECK(a.assignment[0] != a.assignment[2]);
  CHECK(a.inertia == doctest::Approx(0.01));
}

TEST_CASE("k equal to point count gives singletons with zero inertia") {
  Eigen::MatrixXd points(5, 2);
  points << 0, 0, 1, 0, 0, 1, 2, 2, 3, 1;
  ClusterAssignment a = kmeans(points, 5, 7);
  std::set<int> ids(a.assignment.begin(), a.assignment.end());
  CHECK(ids.size() == 5);
  CHECK(a.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans validates inputs") {
  Eigen::MatrixXd points(3, 1);
  points << 1, 2, 3;
  CHECK_THROWS(kmeans(points, 0, 1));
  CHECK_THROWS(kmeans(points, -2, 1));
  CHECK_THROWS(kmeans(points, 4, 1));
  Eigen::MatrixXd dup(3, 1);
  dup << 1, 1, 2;  // only two distinct points
  CHECK_THROWS(kmeans(dup, 3, 1));
}

TEST_CASE("kmeans matches the exhaustive two-cluster optimum") {
  int optimal_hits = 0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    SplitMix64 rng(100 + static_cast<std::uint64_t>(trial));
    Eigen::MatrixXd points(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
      points(i, 0) = rng.uniform(-5.0, 5.0);
      points(i, 1) = rng.uniform(-5.0, 5.0);
    }
    double oracle = brute_force_two_cluster_inertia(points);
    ClusterAssignment a = kmeans(points, 2, 1000 + trial);
    CHECK(a.inertia >= oracle - 1e-9);  // never better than the optimum
    if (a.inertia <= oracle + 1e-9) ++optimal_hits;
  }
  CHECK(optimal_hits >= 40);  // optimum reached on >= 80% of seeds
}

TEST_CASE("inertia is non-increasing across lloyd iterations") {
  SplitMix64 rng(5);
  Eigen::MatrixXd points(60, 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) points(i, j) = rng.normal();
  }
  ClusterAssignment a = kmeans(points, 6, 11);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    CHECK(a.inertia_history[i] <= a.inertia_history[i - 1] + 1e-9);
  }
  CHECK(a.inertia == doctest::Approx(a.inertia_history.back()));
}

TEST_CASE("kmeans is deterministic given the seed") {
  SplitMix64 rng(9);
  Eigen::MatrixXd points(30, 4);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) points(i, j) = rng.normal();
  }
  ClusterAssignment a = kmeans(points, 4, 77);
  ClusterAssignment b = kmeans(points, 4, 77);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("identical prediction columns always co-cluster") {
  ScenarioConfig config;
  config.length = 60;
  config.base_level = 1e6;
  config.noise_std = 0.05;
  config.seed = 4;
  DonationSeries series = generate(config);
  // seasonal_naive at 12 expanding vs sliding produce identical columns.
  std::vector<ModelSpec> specs = {
      {ModelType::seasonal_naive, 12, WindowStrategy::expanding},
      {ModelType::seasonal_naive, 12, WindowStrategy::sliding},
      {ModelType::moving_average, 6, WindowStrategy::sliding},
      {ModelType::moving_average, 24, WindowStrategy::expanding},
      {ModelType::ses_plain, 12, WindowStrategy::sliding},
  };
  ForecastMatrix matrix = build_forecast_matrix(series, specs, 0);
  REQUIRE(matrix.entries().col(0).tail(40) == matrix.entries().col(1).tail(40));
  for (int k = 2; k < 5; ++k) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ClusterAssignment a = cluster_learners(matrix, k, seed);
      CHECK(a.assignment[0] == a.assignment[1]);
    }
  }
}

TEST_CASE("cluster counts follow the requested k") {
  ForecastMatrix monthly = pool_matrix(
      Frequency::monthly, 160, PoolConfig::defaults(Frequency::monthly), 21);
  ClusterAssignment a40 = cluster_learners(monthly.top_rows(136), 40, 1);
  CHECK(a40.k == 40);
  std::set<int> ids(a40.assignment.begin(), a40.assignment.end());
  CHECK(ids.size() == 40);  // no empty clusters

  // A WFB-style weekly pool is large enough for k = 60.
  PoolConfig weekly;
  weekly.model_types = PoolConfig::defaults(Frequency::weekly).model_types;
  weekly.train_lengths = {26, 39, 52, 65, 78, 91, 104, std::nullopt};
  weekly.window_strategies = {WindowStrategy::expanding, WindowStrategy::sliding};
  ForecastMatrix wfb = pool_matrix(Frequency::weekly, 260, weekly, 22);
  REQUIRE(wfb.cols() >= 60);
  ClusterAssignment a60 = cluster_learners(wfb.top_rows(208), 60, 2);
  CHECK(a60.k == 60);
  std::set<int> wids(a60.assignment.begin(), a60.assignment.end());
  CHECK(wids.size() == 60);
}

TEST_CASE("aggregate_clusters averages available members") {
  ScenarioConfig config;
  config.length = 20;
  config.base_level = 1e6;
  config.noise_std = 0.0;
  config.seed = 1;
  DonationSeries series = generate(config);

  std::vector<ModelSpec> specs = {
      {ModelType::moving_average, 2, WindowStrategy::sliding},
      {ModelType::moving_average, 10, WindowStrategy::sliding},
      {ModelType::ses_plain, 5, WindowStrategy::expanding},
  };
  ForecastMatrix matrix = build_forecast_matrix(series, specs, 0);

  ClusterAssignment pair;
  pair.k = 2;
  pair.assignment = {0, 0, 1};
  ClusterForecastMatrix agg = aggregate_clusters(matrix, pair);

  // Step where only the first member of cluster 0 is available.
  CHECK(matrix.available(5, 0));
  CHECK_FALSE(matrix.available(5, 1));
  CHECK(agg.entries(5, 0) == matrix.entries()(5, 0));
  // Step where both members are available: arithmetic mean.
  CHECK(matrix.available(12, 1));
  CHECK(agg.entries(12, 0) ==
        doctest::Approx(0.5 * (matrix.entries()(12, 0) + matrix.entries()(12, 1))));
  // Singleton cluster passes through unchanged.
  for (Eigen::Index t = 0; t < matrix.rows(); ++t) {
    if (matrix.available(t, 2)) {
      CHECK(agg.entries(t, 1) == matrix.entries()(t, 2));
    } else {
      CHECK_FALSE(agg.available(t, 1));
    }
  }
  // Unavailable only when every member is unavailable.
  CHECK_FALSE(agg.available(0, 0));
}

TEST_CASE("select_k prefers true structure") {
  // Two tight, far-apart pairs: silhouette favors k = 2 over 3.
  Eigen::MatrixXd pairs(4, 1);
  pairs << 0.0, 0.05, 10.0, 10.05;
  std::vector<ModelSpec> specs(4, ModelSpec{});
  // Silhouette over raw points via kmeans: check with the oracle directly.
  ClusterAssignment two = kmeans(pairs, 2, 1);
  ClusterAssignment three = kmeans(pairs, 3, 1);
  CHECK(mean_silhouette(pairs, two.assignment, 2) >
        mean_silhouette(pairs, three.assignment, 3));

  // Three well-separated gaussians: candidates {2,3,4,5} pick 3.
  SplitMix64 rng(31);
  Eigen::MatrixXd points(60, 2);
  for (Eigen::Index i = 0; i < 60; ++i) {
    double cx = i < 20 ? 0.0 : i < 40 ? 20.0 : -20.0;
    double cy = i < 20 ? 0.0 : i < 40 ? 15.0 : 10.0;
    points(i, 0) = cx + rng.normal();
    points(i, 1) = cy + rng.normal();
  }
  double best_score = -1e300;
  int best_k = 0;
  for (int k : {2, 3, 4, 5}) {
    ClusterAssignment a = kmeans(points, k, 5);
    double score = silhouette_oracle(points, a.assignment, k);
    CHECK(score ==
          doctest::Approx(mean_silhouette(points, a.assignment, k)).epsilon(1e-12));
    if (score > best_score) {
      best_score = score;
      best_k = k;
    }
  }
  CHECK(best_k == 3);
}

TEST_CASE("select_k over learner trajectories") {
  ForecastMatrix matrix = pool_matrix(Frequency::monthly, 120,
                                      PoolConfig::defaults(Frequency::monthly), 13);
  ForecastMatrix train = matrix.top_rows(96);

  // Single candidate: no choice.
  CHECK(select_k(train, {40}, 3) == 40);

  // The choice maximizes the silhouette among candidates.
  Eigen::MatrixXd points = learner_trajectories(train);
  std::vector<int> candidates = {4, 8, 16};
  int chosen = select_k(train, candidates, 3);
  double chosen_score = 0.0;
  std::map<int, double> scores;
  for (int k : candidates) {
    ClusterAssignment a = kmeans(points, k, 3);
    scores[k] = mean_silhouette(points, a.assignment, k);
    if (k == chosen) chosen_score = scores[k];
  }
  for (const auto& [k, score] : scores) CHECK(chosen_score >= score);

  CHECK_THROWS(select_k(train, {}, 3));
  CHECK_THROWS(select_k(train, {0, -3}, 3));
}

TEST_CASE("assignment json round trips") {
  ForecastMatrix matrix = pool_matrix(Frequency::monthly, 100,
                                      PoolConfig::defaults(Frequency::monthly), 17);
  ClusterAssignment a = cluster_learners(matrix.top_rows(80), 12, 9);
  fs::path path = fs::temp_directory_path() / "foodcast_tests" / "assignment.json";
  fs::create_directories(path.parent_path());
  write_assignment_json(a, matrix.specs(), path);
  ClusterAssignment loaded = load_assignment_json(path, matrix.specs());
  CHECK(loaded.k == a.k);
  CHECK(loaded.seed == a.seed);
  CHECK(loaded.assignment == a.assignment);
  CHECK(loaded.inertia == doctest::Approx(a.inertia));
}
