#include "foodcast/policy_net.hpp"

#include <cmath>
#include <stdexcept>

namespace foodcast {

PolicyNet::PolicyNet(int input_dim, std::vector<int> hidden_layers,
                     int action_dim)
    : input_dim_(input_dim), action_dim_(action_dim), hidden_(std::move(hidden_layers)) {
  if (input_dim_ < 1 || action_dim_ < 1 || hidden_.empty()) {
    throw std::invalid_argument("policy net: bad dimensions");
  }
  Eigen::Index offset = 0;
  auto block = [&offset](Eigen::Index rows, Eigen::Index cols) {
    Block b{offset, rows, cols};
    offset += rows * cols;
    return b;
  };
  int prev = input_dim_;
  for (int width : hidden_) {
    if (width < 1) throw std::invalid_argument("policy net: bad hidden width");
    weight_.push_back(block(width, prev));
    bias_.push_back(block(width, 1));
    prev = width;
  }
  policy_weight_ = block(action_dim_, prev);
  policy_bias_ = block(action_dim_, 1);
  value_weight_ = block(prev, 1);
  value_bias_ = block(1, 1);
  log_std_ = block(action_dim_, 1);
  theta_ = Eigen::VectorXd::Zero(offset);
}

void PolicyNet::init(SplitMix64& rng, double policy_head_gain) {
  auto xavier = [&](const Block& b, double gain) {
    double limit = gain * std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    auto m = mat(theta_, b);
    for (Eigen::Index c = 0; c < b.cols; ++c) {
      for (Eigen::Index r = 0; r < b.rows; ++r) {
        m(r, c) = rng.uniform(-limit, limit);
      }
    }
  };
  for (std::size_t i = 0; i < weight_.size(); ++i) {
    xavier(weight_[i], 1.0);
    mat(theta_, bias_[i]).setZero();
  }
  xavier(policy_weight_, policy_head_gain);
  mat(theta_, policy_bias_).setZero();
  xavier(value_weight_, 1.0);
  mat(theta_, value_bias_).setZero();
  mat(theta_, log_std_).setZero();
}

PolicyNet::Forward PolicyNet::forward(const Eigen::MatrixXd& states) const {
  if (states.cols() != input_dim_) {
    throw std::invalid_argument("policy net: state width mismatch");
  }
  Forward cache;
  Eigen::MatrixXd h = states;
  for (std::size_t i = 0; i < weight_.size(); ++i) {
    h = ((h * mat(weight_[i]).transpose()).rowwise() +
         mat(bias_[i]).col(0).transpose())
            .array()
            .tanh();
    cache.activations.push_back(h);
  }
  cache.mu = (h * mat(policy_weight_).transpose()).rowwise() +
             mat(policy_bias_).col(0).transpose();
  cache.value = h * mat(value_weight_).col(0);
  cache.value.array() += theta_(value_bias_.offset);
  return cache;
}

Eigen::VectorXd PolicyNet::backward(const Eigen::MatrixXd& states,
                                    const Forward& cache,
                                    const Eigen::MatrixXd& d_mu,
                                    const Eigen::VectorXd& d_value,
                                    const Eigen::VectorXd& d_log_std) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  const Eigen::MatrixXd& last = cache.activations.back();

  // Heads.
  mat(grad, policy_weight_) = d_mu.transpose() * last;
  mat(grad, policy_bias_).col(0) = d_mu.colwise().sum().transpose();
  mat(grad, value_weight_).col(0) = last.transpose() * d_value;
  grad(value_bias_.offset) = d_value.sum();
  mat(grad, log_std_).col(0) = d_log_std;

  Eigen::MatrixXd d_h = d_mu * mat(policy_weight_) +
                        d_value * mat(value_weight_).col(0).transpose();

  // Hidden layers, last to first.
  for (int i = static_cast<int>(weight_.size()) - 1; i >= 0; --i) {
    const Eigen::MatrixXd& act = cache.activations[static_cast<std::size_t>(i)];
    Eigen::MatrixXd d_z = d_h.array() * (1.0 - act.array().square());
    const Eigen::MatrixXd& input =
        i == 0 ? states : cache.activations[static_cast<std::size_t>(i - 1)];
    mat(grad, weight_[static_cast<std::size_t>(i)]) = d_z.transpose() * input;
    mat(grad, bias_[static_cast<std::size_t>(i)]).col(0) =
        d_z.colwise().sum().transpose();
    if (i > 0) d_h = d_z * mat(weight_[static_cast<std::size_t>(i)]);
  }
  return grad;
}

Eigen::Map<const Eigen::VectorXd> PolicyNet::log_std() const {
  return {theta_.data() + log_std_.offset, log_std_.rows};
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam: size mismatch");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array().matrix() + (1.0 - beta2_) * grad.cwiseProduct(grad);
  double mc = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double vc = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / mc) / ((v_.array() / vc).sqrt() + epsilon_);
}

}  // namespace foodcast
