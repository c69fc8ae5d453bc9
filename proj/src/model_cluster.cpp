#include "foodcast/model_cluster.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "foodcast/rng.hpp"
#include "foodcast/stats.hpp"

namespace foodcast {
namespace {

using ordered_json = nlohmann::ordered_json;

Eigen::Index count_distinct_rows(const Eigen::MatrixXd& points) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    std::vector<double> row(points.row(i).begin(), points.row(i).end());
    seen.insert(std::move(row));
  }
  return static_cast<Eigen::Index>(seen.size());
}

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index i,
                        const Eigen::MatrixXd& centroids, Eigen::Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

/// Nearest centroid (lowest index wins ties) and its squared distance.
std::pair<int, double> nearest_centroid(const Eigen::MatrixXd& points,
                                        Eigen::Index i,
                                        const Eigen::MatrixXd& centroids) {
  int best = 0;
  double best_d = squared_distance(points, i, centroids, 0);
  for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
    double d = squared_distance(points, i, centroids, c);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return {best, best_d};
}

Eigen::MatrixXd kmeans_plus_plus_init(const Eigen::MatrixXd& points, int k,
                                      SplitMix64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(rng.below(static_cast<std::uint64_t>(n)));

  Eigen::VectorXd d2(n);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) {
        best = std::min(best, squared_distance(points, i, centroids, j));
      }
      d2(i) = best;
    }
    double total = d2.sum();
    if (total <= 0.0) {
      // All remaining points coincide with a chosen centroid.
      centroids.row(c) = points.row(rng.below(static_cast<std::uint64_t>(n)));
      continue;
    }
    double target = rng.uniform() * total;
    double cumulative = 0.0;
    Eigen::Index chosen = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      cumulative += d2(i);
      if (cumulative >= target) {
        chosen = i;
        break;
      }
    }
    centroids.row(c) = points.row(chosen);
  }
  return centroids;
}

}  // namespace

namespace {

ClusterAssignment lloyd_run(const Eigen::MatrixXd& points, int k,
                            std::uint64_t seed, int max_iters,
                            SplitMix64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids = kmeans_plus_plus_init(points, k, rng);

  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  std::vector<double> history;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment step.
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [c, d] = nearest_centroid(points, i, centroids);
      if (assignment[static_cast<std::size_t>(i)] != c) {
        assignment[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
      inertia += d;
    }
    history.push_back(inertia);
    if (!changed) break;

    // Update step.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int c = assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) =
            sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Reseed the empty cluster from the farthest point.
        Eigen::Index farthest = 0;
        double worst = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double d = squared_distance(
              points, i, centroids, assignment[static_cast<std::size_t>(i)]);
          if (d > worst) {
            worst = d;
            farthest = i;
          }
        }
        centroids.row(c) = points.row(farthest);
      }
    }
  }

  ClusterAssignment result;
  result.k = k;
  result.assignment = std::move(assignment);
  result.seed = seed;
  result.inertia_history = std::move(history);

  // Final assignment against the last centroids.
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [c, d] = nearest_centroid(points, i, centroids);
    result.assignment[static_cast<std::size_t>(i)] = c;
    inertia += d;
  }
  result.inertia = inertia;
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace

ClusterAssignment kmeans(const Eigen::MatrixXd& points, int k,
                         std::uint64_t seed, int max_iters, int restarts) {
  if (k <= 0) throw std::invalid_argument("kmeans: k must be positive");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  if (!points.allFinite()) {
    throw std::invalid_argument("kmeans: points must be finite");
  }
  if (k > count_distinct_rows(points)) {
    throw std::invalid_argument("kmeans: k exceeds distinct point count");
  }

  SplitMix64 rng(seed);
  ClusterAssignment best;
  for (int r = 0; r < restarts; ++r) {
    ClusterAssignment run = lloyd_run(points, k, seed, max_iters, rng);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

double mean_silhouette(const Eigen::MatrixXd& points,
                       const std::vector<int>& assignment, int k) {
  const Eigen::Index n = points.rows();
  if (k <= 1 || n < 2) return 0.0;
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (int c : assignment) ++counts[static_cast<std::size_t>(c)];

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int own = assignment[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] <= 1) continue;  // s(i) = 0
    Eigen::VectorXd mean_dist = Eigen::VectorXd::Zero(k);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist(assignment[static_cast<std::size_t>(j)]) +=
          (points.row(i) - points.row(j)).norm();
    }
    double a = mean_dist(own) /
               static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, mean_dist(c) /
                          static_cast<double>(counts[static_cast<std::size_t>(c)]));
    }
    double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

Eigen::MatrixXd learner_trajectories(const ForecastMatrix& train_matrix) {
  const Eigen::Index t_count = train_matrix.rows();
  const Eigen::Index s_count = train_matrix.cols();
  Eigen::MatrixXd filled = train_matrix.entries();

  // Impute unavailable entries with the step's mean available prediction.
  for (Eigen::Index t = 0; t < t_count; ++t) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < s_count; ++j) {
      if (train_matrix.available(t, j)) {
        sum += filled(t, j);
        ++count;
      }
    }
    double fill = count > 0 ? sum / static_cast<double>(count) : 0.0;
    for (Eigen::Index j = 0; j < s_count; ++j) {
      if (!train_matrix.available(t, j)) filled(t, j) = fill;
    }
  }

  // Standardize each step across learners so clusters reflect relative
  // behavior rather than the shared level.
  for (Eigen::Index t = 0; t < t_count; ++t) {
    double mean = filled.row(t).mean();
    double sd = population_std(filled.row(t).transpose());
    if (sd > 0.0) {
      filled.row(t) = (filled.row(t).array() - mean) / sd;
    } else {
      filled.row(t).setZero();
    }
  }
  return filled.transpose();  // one row per learner
}

ClusterAssignment cluster_learners(const ForecastMatrix& train_matrix, int k,
                                   std::uint64_t seed) {
  return kmeans(learner_trajectories(train_matrix), k, seed);
}

ClusterForecastMatrix aggregate_clusters(const ForecastMatrix& matrix,
                                         const ClusterAssignment& assignment) {
  if (assignment.assignment.size() !=
      static_cast<std::size_t>(matrix.cols())) {
    throw std::invalid_argument(
        "aggregate_clusters: assignment does not cover matrix columns");
  }
  ClusterForecastMatrix out;
  out.frequency = matrix.frequency();
  out.steps = matrix.steps();
  out.entries = Eigen::MatrixXd::Constant(matrix.rows(), assignment.k,
                                          ForecastMatrix::kUnavailable);
  for (Eigen::Index t = 0; t < matrix.rows(); ++t) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(assignment.k);
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(assignment.k);
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (!matrix.available(t, j)) continue;
      int c = assignment.assignment[static_cast<std::size_t>(j)];
      sums(c) += matrix.entries()(t, j);
      counts(c) += 1;
    }
    for (int c = 0; c < assignment.k; ++c) {
      if (counts(c) > 0) out.entries(t, c) = sums(c) / counts(c);
    }
  }
  return out;
}

int select_k(const ForecastMatrix& train_matrix,
             const std::vector<int>& candidates, std::uint64_t seed) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_k: no candidates");
  }
  Eigen::MatrixXd points = learner_trajectories(train_matrix);
  Eigen::Index distinct = count_distinct_rows(points);

  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());

  bool found = false;
  int best_k = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k : sorted) {
    if (k <= 0 || k > distinct) continue;
    ClusterAssignment a = kmeans(points, k, seed);
    double score = mean_silhouette(points, a.assignment, k);
    if (!found || score > best_score) {
      found = true;
      best_score = score;
      best_k = k;
    }
  }
  if (!found) {
    throw std::invalid_argument("select_k: no candidate valid for kmeans");
  }
  return best_k;
}

void write_assignment_json(const ClusterAssignment& assignment,
                           const std::vector<ModelSpec>& specs,
                           const std::filesystem::path& path) {
  if (specs.size() != assignment.assignment.size()) {
    throw std::invalid_argument("write_assignment_json: spec count mismatch");
  }
  ordered_json j;
  j["k"] = assignment.k;
  j["seed"] = assignment.seed;
  j["assignment"] = ordered_json::object();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    j["assignment"][specs[i].name()] = assignment.assignment[i];
  }
  j["inertia"] = assignment.inertia;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write assignment: " + path.string());
  out << j.dump(2) << '\n';
}

ClusterAssignment load_assignment_json(const std::filesystem::path& path,
                                       const std::vector<ModelSpec>& specs) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open assignment: " + path.string());
  ordered_json j = ordered_json::parse(in);
  ClusterAssignment a;
  a.k = j.at("k").get<int>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.inertia = j.at("inertia").get<double>();
  a.assignment.reserve(specs.size());
  for (const ModelSpec& spec : specs) {
    a.assignment.push_back(j.at("assignment").at(spec.name()).get<int>());
  }
  return a;
}

}  // namespace foodcast
