#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "foodcast/base_pool.hpp"
#include "foodcast/feature_extract.hpp"
#include "foodcast/meta_ensemble.hpp"
#include "foodcast/model_cluster.hpp"
#include "foodcast/policy_net.hpp"

namespace foodcast {

/// PPO hyperparameters. The policy shape, learning rate, and epoch count
/// follow the published training setup; the remaining knobs are artifact
/// defaults.
struct PpoConfig {
  std::vector<int> hidden_layers = {64, 64};
  double learning_rate = 1e-4;
  int epochs_per_update = 10;
  double clip_epsilon = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  int rollout_episodes_per_update = 4;
  int total_updates = 500;
  double entropy_coeff = 0.01;
  double value_coeff = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sequential weighting environment over one split: the agent sees
/// [standardized features; scaled predictions; previous weights], acts with
/// simplex weights, and is rewarded with the negative step MAPE.
class EnsembleEnv {
 public:
  /// predictions carry NaN for unavailable entries. In clustered mode,
  /// all-member-unavailable cells carry the previous step's value forward;
  /// in plain mode they are padded with the step's row mean and masked out
  /// of the action via the logit mask.
  EnsembleEnv(Eigen::MatrixXd predictions, Eigen::MatrixXd features,
              Eigen::VectorXd actuals, double prediction_scale,
              bool plain_mode);

  int width() const { return static_cast<int>(filled_.cols()); }
  Eigen::Index state_dim() const {
    return features_.cols() + 2 * filled_.cols();
  }
  Eigen::Index start_step() const { return start_; }
  Eigen::Index step_count() const { return filled_.rows(); }

  Eigen::VectorXd reset();

  struct StepResult {
    Eigen::VectorXd state;  // empty when done
    double reward = 0.0;
    bool done = false;
    double prediction = 0.0;
    double actual = 0.0;
  };
  /// Validates the simplex action; normalization is the policy's job.
  StepResult step(const WeightVector& action);

  /// 1 for usable columns at step t, 0 for masked (plain-mode) columns.
  Eigen::VectorXd logit_mask(Eigen::Index t) const {
    return mask_.row(t).transpose();
  }
  Eigen::VectorXd current_mask() const { return logit_mask(current_); }
  Eigen::Index current_step() const { return current_; }

  /// Value of column j at step t after fill (exposed for audits/tests).
  const Eigen::MatrixXd& filled_predictions() const { return filled_; }
  const Eigen::VectorXd& actuals() const { return actuals_; }

  Eigen::VectorXd state_at(Eigen::Index t,
                           const Eigen::VectorXd& previous_weights) const;

 private:
  Eigen::MatrixXd filled_;
  Eigen::MatrixXd mask_;
  Eigen::MatrixXd features_;
  Eigen::VectorXd actuals_;
  double scale_ = 1.0;
  Eigen::Index start_ = 0;
  Eigen::Index current_ = 0;
  Eigen::VectorXd previous_weights_;
  bool done_ = true;
};

/// Softmax policy output; masked slots get -inf logits (exact zero weight).
/// deterministic = true uses the Gaussian mean (no sampling).
WeightVector policy_weights(const PolicyNet& policy,
                            const Eigen::VectorXd& state, bool deterministic,
                            const Eigen::VectorXd* mask = nullptr,
                            SplitMix64* rng = nullptr);

/// One stochastic draw with everything PPO needs to learn from it.
struct ActionSample {
  Eigen::VectorXd logits;  // sampled point in logit space
  WeightVector weights;
  double log_prob = 0.0;  // Gaussian log-density over unmasked dims
  double value = 0.0;
};
ActionSample sample_action(const PolicyNet& policy, const Eigen::VectorXd& state,
                           const Eigen::VectorXd& mask, SplitMix64& rng);

/// Experience batch for one PPO update (and for gradient checks).
struct PpoBatch {
  Eigen::MatrixXd states;      // B x S
  Eigen::MatrixXd logits;      // B x A, sampled actions in logit space
  Eigen::MatrixXd masks;       // B x A
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;  // normalized
  Eigen::VectorXd returns;
};

/// Clipped-surrogate + value + entropy loss and its analytic gradient
/// w.r.t. the flat parameters.
std::pair<double, Eigen::VectorXd> ppo_loss_and_gradient(
    const PolicyNet& policy, const PpoBatch& batch, const PpoConfig& config);

double ppo_loss(const PolicyNet& policy, const PpoBatch& batch,
                const PpoConfig& config);

struct PpoTrainResult {
  PolicyNet policy;
  std::vector<double> reward_curve;  // mean episode reward per update
};

/// Full PPO loop: collect rollout episodes, compute GAE, run
/// epochs_per_update full-batch Adam passes. Deterministic given the seed.
PpoTrainResult ppo_train(EnsembleEnv& env, const PpoConfig& config);

/// End-to-end RL ensembling configuration shared by plain RL and the
/// clustered variant.
struct RlRunConfig {
  std::optional<int> k_clusters;  // nullopt = plain mode, one slot per learner
  PpoConfig ppo;
  std::vector<int> feature_windows;
  Eigen::Index test_periods = 0;
  std::uint64_t seed = 0;
};

struct RlRunResult {
  Eigen::VectorXd test_predictions;
  Eigen::MatrixXd test_weights;  // test step x width
  std::vector<double> reward_curve;
  std::optional<ClusterAssignment> assignment;  // clustered mode only
  PolicyNet policy;
};

/// Clusters learners on the training split (clustered mode), trains PPO on
/// the training split, then rolls the frozen deterministic policy across
/// the test split.
RlRunResult run_rl_ensemble(const DonationSeries& series,
                            const ForecastMatrix& matrix,
                            const RlRunConfig& config);

/// Versioned binary policy file with embedded config and seed.
void save_policy(const PolicyNet& policy, const PpoConfig& config,
                 const std::filesystem::path& path);
struct LoadedPolicy {
  PolicyNet policy;
  PpoConfig config;
};
LoadedPolicy load_policy(const std::filesystem::path& path);

/// `update,mean_reward` CSV.
void write_reward_curve_csv(const std::vector<double>& curve,
                            const std::filesystem::path& path);

}  // namespace foodcast
