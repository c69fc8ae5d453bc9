#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foodcast/base_pool.hpp"

namespace foodcast {

/// Result of clustering points (or learners) into k groups.
struct ClusterAssignment {
  int k = 0;
  std::vector<int> assignment;       // point index -> cluster id in [0, k)
  Eigen::MatrixXd centroids;         // k x dims
  std::uint64_t seed = 0;
  double inertia = 0.0;              // within-cluster sum of squares
  std::vector<double> inertia_history;  // per Lloyd iteration
};

/// Lloyd's algorithm with k-means++ initialization, best of `restarts`
/// independent runs by inertia. Points are rows. Deterministic given seed;
/// empty clusters are reseeded from the point farthest from its centroid.
ClusterAssignment kmeans(const Eigen::MatrixXd& points, int k,
                         std::uint64_t seed, int max_iters = 100,
                         int restarts = 10);

/// Mean silhouette score over all points (Euclidean). Singleton-cluster
/// points score 0; k == 1 scores 0.
double mean_silhouette(const Eigen::MatrixXd& points,
                       const std::vector<int>& assignment, int k);

/// Learner trajectories for clustering: training prediction columns with
/// unavailable entries imputed by the step's row mean, then standardized
/// per step across learners. One row per spec.
Eigen::MatrixXd learner_trajectories(const ForecastMatrix& train_matrix);

/// Clusters learners by their training prediction trajectories.
ClusterAssignment cluster_learners(const ForecastMatrix& train_matrix, int k,
                                   std::uint64_t seed);

/// Per-step cluster-mean predictions; NaN only when every member of the
/// cluster is unavailable at that step.
struct ClusterForecastMatrix {
  Frequency frequency = Frequency::monthly;
  std::vector<Period> steps;
  Eigen::MatrixXd entries;  // steps x clusters

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  bool available(Eigen::Index t, Eigen::Index j) const {
    return !std::isnan(entries(t, j));
  }
};

ClusterForecastMatrix aggregate_clusters(const ForecastMatrix& matrix,
                                         const ClusterAssignment& assignment);

/// Picks the candidate k with the highest mean silhouette on the training
/// trajectories; ties break toward smaller k. Invalid candidates are
/// skipped; throws if none are usable.
int select_k(const ForecastMatrix& train_matrix,
             const std::vector<int>& candidates, std::uint64_t seed);

/// JSON round trip: {k, seed, assignment: spec_name -> cluster_id, inertia}.
void write_assignment_json(const ClusterAssignment& assignment,
                           const std::vector<ModelSpec>& specs,
                           const std::filesystem::path& path);
ClusterAssignment load_assignment_json(const std::filesystem::path& path,
                                       const std::vector<ModelSpec>& specs);

}  // namespace foodcast
