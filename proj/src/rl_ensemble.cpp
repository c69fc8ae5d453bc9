#include "foodcast/rl_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "foodcast/stats.hpp"

namespace foodcast {
namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

/// Gaussian log-density of z under (mu, log_std), restricted to masked-in dims.
double masked_log_prob(const Eigen::VectorXd& z, const Eigen::VectorXd& mu,
                       const Eigen::VectorXd& log_std,
                       const Eigen::VectorXd& mask) {
  double logp = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (mask(j) == 0.0) continue;
    double sigma = std::exp(log_std(j));
    double u = (z(j) - mu(j)) / sigma;
    logp += -0.5 * u * u - log_std(j) - kHalfLog2Pi;
  }
  return logp;
}

}  // namespace

void PpoConfig::validate() const {
  if (hidden_layers.empty()) {
    throw std::invalid_argument("ppo config: need at least one hidden layer");
  }
  for (int h : hidden_layers) {
    if (h < 1) throw std::invalid_argument("ppo config: bad hidden width");
  }
  if (learning_rate <= 0.0 || clip_epsilon <= 0.0) {
    throw std::invalid_argument("ppo config: rates must be positive");
  }
  if (discount < 0.0 || discount > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0) {
    throw std::invalid_argument("ppo config: discount/lambda must be in [0, 1]");
  }
  if (epochs_per_update < 1 || rollout_episodes_per_update < 1 ||
      total_updates < 1) {
    throw std::invalid_argument("ppo config: counts must be >= 1");
  }
  if (entropy_coeff < 0.0 || value_coeff < 0.0) {
    throw std::invalid_argument("ppo config: coefficients must be >= 0");
  }
}

EnsembleEnv::EnsembleEnv(Eigen::MatrixXd predictions, Eigen::MatrixXd features,
                         Eigen::VectorXd actuals, double prediction_scale,
                         bool plain_mode)
    : filled_(std::move(predictions)),
      features_(std::move(features)),
      actuals_(std::move(actuals)),
      scale_(prediction_scale) {
  const Eigen::Index t_count = filled_.rows();
  const Eigen::Index width = filled_.cols();
  if (features_.rows() != t_count || actuals_.size() != t_count || width == 0) {
    throw std::invalid_argument("env: shape mismatch");
  }
  if (!(scale_ > 0.0)) {
    throw std::invalid_argument("env: prediction scale must be positive");
  }

  mask_ = Eigen::MatrixXd::Zero(t_count, width);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index j = 0; j < width; ++j) {
      if (!std::isnan(filled_(t, j))) mask_(t, j) = 1.0;
    }
  }

  if (!plain_mode) {
    // Clustered mode: carry the previous cluster value forward over
    // all-member-unavailable cells. Leading gaps (a cluster not yet seen)
    // stay masked like plain-mode columns.
    for (Eigen::Index t = 1; t < t_count; ++t) {
      for (Eigen::Index j = 0; j < width; ++j) {
        if (mask_(t, j) == 0.0 && mask_(t - 1, j) == 1.0) {
          filled_(t, j) = filled_(t - 1, j);
          mask_(t, j) = 1.0;
        }
      }
    }
  }

  // The episode starts at the first step whose state is fully defined:
  // columns still masked there are padded with the step's mean available
  // prediction and excluded from the action by the logit mask.
  start_ = -1;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    Eigen::Index k = 0;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < width; ++j) {
      if (mask_(t, j) == 1.0) {
        sum += filled_(t, j);
        ++k;
      }
    }
    if (k == 0) continue;
    if (start_ < 0) start_ = t;
    double fill = sum / static_cast<double>(k);
    for (Eigen::Index j = 0; j < width; ++j) {
      if (mask_(t, j) == 0.0) filled_(t, j) = fill;
    }
  }
  if (start_ < 0) {
    throw std::invalid_argument("env: no step with available predictions");
  }
}

Eigen::VectorXd EnsembleEnv::state_at(
    Eigen::Index t, const Eigen::VectorXd& previous_weights) const {
  Eigen::VectorXd state(state_dim());
  state.head(features_.cols()) = features_.row(t).transpose();
  state.segment(features_.cols(), filled_.cols()) =
      filled_.row(t).transpose() / scale_;
  state.tail(filled_.cols()) = previous_weights;
  return state;
}

Eigen::VectorXd EnsembleEnv::reset() {
  current_ = start_;
  previous_weights_ =
      Eigen::VectorXd::Constant(width(), 1.0 / static_cast<double>(width()));
  done_ = false;
  return state_at(current_, previous_weights_);
}

EnsembleEnv::StepResult EnsembleEnv::step(const WeightVector& action) {
  if (done_) throw std::logic_error("env: step after done");
  if (action.weights.size() != width()) {
    throw std::invalid_argument("env: action width mismatch");
  }
  action.validate();

  StepResult result;
  result.actual = actuals_(current_);
  result.prediction = filled_.row(current_).dot(action.weights);
  result.reward =
      -100.0 * std::abs(result.prediction - result.actual) / result.actual;

  previous_weights_ = action.weights;
  ++current_;
  if (current_ >= step_count()) {
    done_ = true;
    result.done = true;
  } else {
    result.state = state_at(current_, previous_weights_);
  }
  return result;
}

WeightVector policy_weights(const PolicyNet& policy,
                            const Eigen::VectorXd& state, bool deterministic,
                            const Eigen::VectorXd* mask, SplitMix64* rng) {
  if (state.size() != policy.input_dim()) {
    throw std::invalid_argument("policy_weights: state width mismatch");
  }
  PolicyNet::Forward fw = policy.forward(state.transpose());
  Eigen::VectorXd logits = fw.mu.row(0).transpose();
  if (!deterministic) {
    if (rng == nullptr) {
      throw std::invalid_argument("policy_weights: sampling needs an rng");
    }
    auto log_std = policy.log_std();
    for (Eigen::Index j = 0; j < logits.size(); ++j) {
      logits(j) += std::exp(log_std(j)) * rng->normal();
    }
  }
  if (mask != nullptr) {
    if (mask->size() != logits.size()) {
      throw std::invalid_argument("policy_weights: mask width mismatch");
    }
    if ((mask->array() == 0.0).all()) {
      throw std::invalid_argument("policy_weights: fully masked action");
    }
    for (Eigen::Index j = 0; j < logits.size(); ++j) {
      if ((*mask)(j) == 0.0) logits(j) = -std::numeric_limits<double>::infinity();
    }
  }
  WeightVector w{softmax(logits)};
  w.validate();
  return w;
}

ActionSample sample_action(const PolicyNet& policy, const Eigen::VectorXd& state,
                           const Eigen::VectorXd& mask, SplitMix64& rng) {
  PolicyNet::Forward fw = policy.forward(state.transpose());
  Eigen::VectorXd mu = fw.mu.row(0).transpose();
  auto log_std = policy.log_std();

  ActionSample sample;
  sample.logits = mu;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    sample.logits(j) += std::exp(log_std(j)) * rng.normal();
  }
  sample.log_prob = masked_log_prob(sample.logits, mu, log_std, mask);
  sample.value = fw.value(0);

  Eigen::VectorXd masked = sample.logits;
  for (Eigen::Index j = 0; j < masked.size(); ++j) {
    if (mask(j) == 0.0) masked(j) = -std::numeric_limits<double>::infinity();
  }
  sample.weights = WeightVector{softmax(masked)};
  sample.weights.validate();
  return sample;
}

std::pair<double, Eigen::VectorXd> ppo_loss_and_gradient(
    const PolicyNet& policy, const PpoBatch& batch, const PpoConfig& config) {
  const Eigen::Index b_size = batch.states.rows();
  const Eigen::Index a_dim = batch.logits.cols();
  if (b_size == 0) throw std::invalid_argument("ppo loss: empty batch");

  PolicyNet::Forward fw = policy.forward(batch.states);
  auto log_std = policy.log_std();
  Eigen::VectorXd sigma = log_std.array().exp();

  // New log-probabilities and per-sample entropy over masked-in dims.
  Eigen::VectorXd new_log_probs(b_size);
  Eigen::VectorXd entropy(b_size);
  for (Eigen::Index i = 0; i < b_size; ++i) {
    double logp = 0.0, ent = 0.0;
    for (Eigen::Index j = 0; j < a_dim; ++j) {
      if (batch.masks(i, j) == 0.0) continue;
      double u = (batch.logits(i, j) - fw.mu(i, j)) / sigma(j);
      logp += -0.5 * u * u - log_std(j) - kHalfLog2Pi;
      ent += log_std(j) + kHalfLog2Pi + 0.5;
    }
    new_log_probs(i) = logp;
    entropy(i) = ent;
  }

  const double inv_b = 1.0 / static_cast<double>(b_size);
  const double lo = 1.0 - config.clip_epsilon;
  const double hi = 1.0 + config.clip_epsilon;

  double pg_loss = 0.0;
  Eigen::VectorXd d_log_prob = Eigen::VectorXd::Zero(b_size);
  for (Eigen::Index i = 0; i < b_size; ++i) {
    double ratio = std::exp(new_log_probs(i) - batch.old_log_probs(i));
    double adv = batch.advantages(i);
    double surr1 = ratio * adv;
    double surr2 = clip(ratio, lo, hi) * adv;
    pg_loss -= inv_b * std::min(surr1, surr2);
    double d_ratio;
    if (surr1 <= surr2) {
      d_ratio = -inv_b * adv;
    } else {
      d_ratio = (ratio > lo && ratio < hi) ? -inv_b * adv : 0.0;
    }
    d_log_prob(i) = d_ratio * ratio;
  }

  Eigen::VectorXd value_err = fw.value - batch.returns;
  double v_loss = value_err.squaredNorm() * inv_b;
  double ent_loss = -entropy.mean();
  double total = pg_loss + config.value_coeff * v_loss +
                 config.entropy_coeff * ent_loss;

  // Backprop.
  Eigen::MatrixXd d_mu = Eigen::MatrixXd::Zero(b_size, a_dim);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(a_dim);
  for (Eigen::Index i = 0; i < b_size; ++i) {
    if (d_log_prob(i) == 0.0) continue;
    for (Eigen::Index j = 0; j < a_dim; ++j) {
      if (batch.masks(i, j) == 0.0) continue;
      double u = (batch.logits(i, j) - fw.mu(i, j)) / sigma(j);
      d_mu(i, j) = d_log_prob(i) * u / sigma(j);
      d_log_std(j) += d_log_prob(i) * (u * u - 1.0);
    }
  }
  // Entropy term: d(-mean entropy)/d log_std_j = -(1/B) sum_i mask_ij.
  for (Eigen::Index j = 0; j < a_dim; ++j) {
    d_log_std(j) -=
        config.entropy_coeff * inv_b * batch.masks.col(j).sum();
  }
  Eigen::VectorXd d_value = 2.0 * config.value_coeff * inv_b * value_err;

  Eigen::VectorXd grad =
      policy.backward(batch.states, fw, d_mu, d_value, d_log_std);
  return {total, std::move(grad)};
}

double ppo_loss(const PolicyNet& policy, const PpoBatch& batch,
                const PpoConfig& config) {
  const Eigen::Index b_size = batch.states.rows();
  PolicyNet::Forward fw = policy.forward(batch.states);
  auto log_std = policy.log_std();
  Eigen::VectorXd sigma = log_std.array().exp();

  const double inv_b = 1.0 / static_cast<double>(b_size);
  const double lo = 1.0 - config.clip_epsilon;
  const double hi = 1.0 + config.clip_epsilon;
  double pg_loss = 0.0, ent_sum = 0.0;
  for (Eigen::Index i = 0; i < b_size; ++i) {
    double logp = 0.0;
    for (Eigen::Index j = 0; j < batch.logits.cols(); ++j) {
      if (batch.masks(i, j) == 0.0) continue;
      double u = (batch.logits(i, j) - fw.mu(i, j)) / sigma(j);
      logp += -0.5 * u * u - log_std(j) - kHalfLog2Pi;
      ent_sum += log_std(j) + kHalfLog2Pi + 0.5;
    }
    double ratio = std::exp(logp - batch.old_log_probs(i));
    double adv = batch.advantages(i);
    pg_loss -= inv_b * std::min(ratio * adv, clip(ratio, lo, hi) * adv);
  }
  double v_loss = (fw.value - batch.returns).squaredNorm() * inv_b;
  return pg_loss + config.value_coeff * v_loss +
         config.entropy_coeff * (-ent_sum * inv_b);
}

PpoTrainResult ppo_train(EnsembleEnv& env, const PpoConfig& config) {
  config.validate();
  const Eigen::Index episode_len = env.step_count() - env.start_step();
  if (episode_len < 1) throw std::invalid_argument("ppo_train: empty episode");
  const int episodes = config.rollout_episodes_per_update;
  const Eigen::Index b_size = episodes * episode_len;
  const Eigen::Index s_dim = env.state_dim();
  const int a_dim = env.width();

  SplitMix64 master(config.seed);
  SplitMix64 init_rng = master.fork(0);
  PolicyNet policy(static_cast<int>(s_dim), config.hidden_layers, a_dim);
  policy.init(init_rng);
  AdamOptimizer optimizer(policy.parameter_count(), config.learning_rate);

  PpoBatch batch;
  batch.states.resize(b_size, s_dim);
  batch.logits.resize(b_size, a_dim);
  batch.masks.resize(b_size, a_dim);
  batch.old_log_probs.resize(b_size);
  batch.advantages.resize(b_size);
  batch.returns.resize(b_size);
  Eigen::VectorXd rewards(b_size);
  Eigen::VectorXd values(b_size);

  PpoTrainResult result;
  result.reward_curve.reserve(static_cast<std::size_t>(config.total_updates));

  for (int update = 0; update < config.total_updates; ++update) {
    double episode_reward_sum = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
      SplitMix64 ep_rng = master.fork(
          1 + static_cast<std::uint64_t>(update) * episodes + ep);
      Eigen::VectorXd state = env.reset();
      for (Eigen::Index t = 0; t < episode_len; ++t) {
        const Eigen::Index row = ep * episode_len + t;
        Eigen::VectorXd mask = env.current_mask();
        ActionSample sample = sample_action(policy, state, mask, ep_rng);
        EnsembleEnv::StepResult sr = env.step(sample.weights);

        batch.states.row(row) = state.transpose();
        batch.logits.row(row) = sample.logits.transpose();
        batch.masks.row(row) = mask.transpose();
        batch.old_log_probs(row) = sample.log_prob;
        values(row) = sample.value;
        rewards(row) = sr.reward;
        episode_reward_sum += sr.reward;
        if (sr.done) break;
        state = sr.state;
      }
    }

    double mean_episode_reward = episode_reward_sum / episodes;
    if (!std::isfinite(mean_episode_reward)) {
      throw std::runtime_error(
          "ppo_train: diverged at update " + std::to_string(update) +
          " (non-finite mean episode reward)");
    }
    result.reward_curve.push_back(mean_episode_reward);

    // GAE within each episode; terminal bootstrap is zero.
    for (int ep = 0; ep < episodes; ++ep) {
      double gae = 0.0;
      for (Eigen::Index t = episode_len - 1; t >= 0; --t) {
        const Eigen::Index row = ep * episode_len + t;
        double next_value = t == episode_len - 1 ? 0.0 : values(row + 1);
        double next_gae = t == episode_len - 1 ? 0.0 : gae;
        double delta =
            rewards(row) + config.discount * next_value - values(row);
        gae = delta + config.discount * config.gae_lambda * next_gae;
        batch.advantages(row) = gae;
        batch.returns(row) = gae + values(row);
      }
    }
    double adv_mean = batch.advantages.mean();
    double adv_std = population_std(batch.advantages);
    batch.advantages = (batch.advantages.array() - adv_mean) / (adv_std + 1e-8);

    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
      auto [loss, grad] = ppo_loss_and_gradient(policy, batch, config);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("ppo_train: diverged at update " +
                                 std::to_string(update) + " epoch " +
                                 std::to_string(epoch) + " (non-finite loss)");
      }
      optimizer.step(policy.parameters(), grad);
    }
  }

  result.policy = std::move(policy);
  return result;
}

RlRunResult run_rl_ensemble(const DonationSeries& series,
                            const ForecastMatrix& matrix,
                            const RlRunConfig& config) {
  config.ppo.validate();
  const Eigen::Index n = series.size();
  if (matrix.rows() != n) {
    throw std::invalid_argument("run_rl_ensemble: matrix/series mismatch");
  }
  if (config.test_periods <= 0 || config.test_periods >= n) {
    throw std::invalid_argument("run_rl_ensemble: bad test_periods");
  }
  if (config.feature_windows.empty()) {
    throw std::invalid_argument("run_rl_ensemble: no feature windows");
  }
  const Eigen::Index n_train = n - config.test_periods;

  FeatureTable table = build_feature_table(series, config.feature_windows);
  FeatureScaler scaler = fit_feature_scaler(table, n_train);
  Eigen::MatrixXd features = scaler.apply(table.rows);

  RlRunResult result;
  Eigen::MatrixXd predictions;
  bool plain_mode = !config.k_clusters.has_value();
  if (plain_mode) {
    predictions = matrix.entries();
  } else {
    result.assignment =
        cluster_learners(matrix.top_rows(n_train), *config.k_clusters, config.seed);
    predictions = aggregate_clusters(matrix, *result.assignment).entries;
  }

  const double scale = series.values().head(n_train).mean();
  EnsembleEnv train_env(predictions.topRows(n_train), features.topRows(n_train),
                        series.values().head(n_train), scale, plain_mode);

  PpoConfig ppo = config.ppo;
  ppo.seed = SplitMix64(config.seed).fork(1).seed();
  PpoTrainResult trained = ppo_train(train_env, ppo);
  result.reward_curve = std::move(trained.reward_curve);
  result.policy = std::move(trained.policy);

  // Clustered carry-forward must cross the split boundary, so the test
  // environment is built over filled rows from a full-range environment.
  EnsembleEnv full_env(predictions, features, series.values(), scale, plain_mode);
  EnsembleEnv test_env(full_env.filled_predictions().bottomRows(config.test_periods),
                       features.bottomRows(config.test_periods),
                       series.values().tail(config.test_periods), scale,
                       plain_mode);
  if (test_env.start_step() != 0) {
    throw std::runtime_error(
        "run_rl_ensemble: predictions unavailable at the first test step");
  }

  result.test_predictions.resize(config.test_periods);
  result.test_weights.resize(config.test_periods, test_env.width());
  Eigen::VectorXd state = test_env.reset();
  for (Eigen::Index t = 0; t < config.test_periods; ++t) {
    Eigen::VectorXd mask = test_env.current_mask();
    WeightVector w = policy_weights(result.policy, state, true, &mask);
    EnsembleEnv::StepResult sr = test_env.step(w);
    result.test_predictions(t) = sr.prediction;
    result.test_weights.row(t) = w.weights.transpose();
    if (!sr.done) state = sr.state;
  }
  return result;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("policy file: truncated");
  return value;
}

constexpr std::uint32_t kPolicyMagic = 0x4C504346;  // "FCPL"
constexpr std::uint32_t kPolicyVersion = 1;

}  // namespace

void save_policy(const PolicyNet& policy, const PpoConfig& config,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write policy: " + path.string());
  write_raw(out, kPolicyMagic);
  write_raw(out, kPolicyVersion);
  write_raw(out, config.seed);
  write_raw(out, config.learning_rate);
  write_raw(out, config.clip_epsilon);
  write_raw(out, config.discount);
  write_raw(out, config.gae_lambda);
  write_raw(out, config.entropy_coeff);
  write_raw(out, config.value_coeff);
  write_raw(out, static_cast<std::int32_t>(config.epochs_per_update));
  write_raw(out, static_cast<std::int32_t>(config.rollout_episodes_per_update));
  write_raw(out, static_cast<std::int32_t>(config.total_updates));
  write_raw(out, static_cast<std::int32_t>(policy.input_dim()));
  write_raw(out, static_cast<std::int32_t>(policy.action_dim()));
  write_raw(out, static_cast<std::int32_t>(policy.hidden_layers().size()));
  for (int h : policy.hidden_layers()) write_raw(out, static_cast<std::int32_t>(h));
  write_raw(out, static_cast<std::int64_t>(policy.parameter_count()));
  out.write(reinterpret_cast<const char*>(policy.parameters().data()),
            static_cast<std::streamsize>(policy.parameter_count() *
                                         sizeof(double)));
}

LoadedPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy: " + path.string());
  if (read_raw<std::uint32_t>(in) != kPolicyMagic) {
    throw std::runtime_error("policy file: bad magic");
  }
  if (read_raw<std::uint32_t>(in) != kPolicyVersion) {
    throw std::runtime_error("policy file: unsupported version");
  }
  LoadedPolicy loaded;
  loaded.config.seed = read_raw<std::uint64_t>(in);
  loaded.config.learning_rate = read_raw<double>(in);
  loaded.config.clip_epsilon = read_raw<double>(in);
  loaded.config.discount = read_raw<double>(in);
  loaded.config.gae_lambda = read_raw<double>(in);
  loaded.config.entropy_coeff = read_raw<double>(in);
  loaded.config.value_coeff = read_raw<double>(in);
  loaded.config.epochs_per_update = read_raw<std::int32_t>(in);
  loaded.config.rollout_episodes_per_update = read_raw<std::int32_t>(in);
  loaded.config.total_updates = read_raw<std::int32_t>(in);
  int input_dim = read_raw<std::int32_t>(in);
  int action_dim = read_raw<std::int32_t>(in);
  int hidden_count = read_raw<std::int32_t>(in);
  std::vector<int> hidden;
  for (int i = 0; i < hidden_count; ++i) hidden.push_back(read_raw<std::int32_t>(in));
  loaded.config.hidden_layers = hidden;
  loaded.policy = PolicyNet(input_dim, hidden, action_dim);
  auto count = read_raw<std::int64_t>(in);
  if (count != loaded.policy.parameter_count()) {
    throw std::runtime_error("policy file: parameter count mismatch");
  }
  in.read(reinterpret_cast<char*>(loaded.policy.parameters().data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("policy file: truncated parameters");
  return loaded;
}

void write_reward_curve_csv(const std::vector<double>& curve,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve: " + path.string());
  out << "update,mean_reward\n";
  out.precision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << ',' << curve[i] << '\n';
  }
}

}  // namespace foodcast
