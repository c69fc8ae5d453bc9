#pragma once

#include <Eigen/Dense>

#include <vector>

#include "foodcast/rng.hpp"

namespace foodcast {

/// Two-head multilayer perceptron over a single flat parameter vector:
/// tanh hidden layers, a linear policy head emitting one logit mean per
/// weight slot, a scalar value head, and a state-independent log-std vector
/// for Gaussian exploration in logit space.
///
/// Parameters live in one Eigen vector so the optimizer and the
/// finite-difference checks can treat the network as a plain function of
/// theta.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(int input_dim, std::vector<int> hidden_layers, int action_dim);

  int input_dim() const { return input_dim_; }
  int action_dim() const { return action_dim_; }
  const std::vector<int>& hidden_layers() const { return hidden_; }

  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }
  Eigen::Index parameter_count() const { return theta_.size(); }

  /// Xavier-uniform init; the policy head is scaled down so initial logits
  /// are near zero (near-uniform softmax). log-std starts at 0.
  void init(SplitMix64& rng, double policy_head_gain = 0.01);

  /// Activation cache from a batched forward pass (states are rows).
  struct Forward {
    std::vector<Eigen::MatrixXd> activations;  // per hidden layer, B x width
    Eigen::MatrixXd mu;                        // B x action_dim
    Eigen::VectorXd value;                     // B
  };

  Forward forward(const Eigen::MatrixXd& states) const;

  /// Gradient of a scalar loss w.r.t. the flat parameters, given the
  /// upstream gradients at the heads. d_log_std accumulates any direct
  /// gradient on the log-std vector.
  Eigen::VectorXd backward(const Eigen::MatrixXd& states, const Forward& cache,
                           const Eigen::MatrixXd& d_mu,
                           const Eigen::VectorXd& d_value,
                           const Eigen::VectorXd& d_log_std) const;

  /// View of the log-std block of the parameter vector.
  Eigen::Map<const Eigen::VectorXd> log_std() const;

 private:
  struct Block {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
  };

  Eigen::Map<const Eigen::MatrixXd> mat(const Block& b) const {
    return {theta_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<Eigen::MatrixXd> mat(Eigen::VectorXd& v, const Block& b) const {
    return {v.data() + b.offset, b.rows, b.cols};
  }

  int input_dim_ = 0;
  int action_dim_ = 0;
  std::vector<int> hidden_;
  std::vector<Block> weight_;  // per hidden layer
  std::vector<Block> bias_;
  Block policy_weight_, policy_bias_, value_weight_, value_bias_, log_std_;
  Eigen::VectorXd theta_;
};

/// Adam with bias correction over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  double lr_, beta1_, beta2_, epsilon_;
  long t_ = 0;
};

}  // namespace foodcast
