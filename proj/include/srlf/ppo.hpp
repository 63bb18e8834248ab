#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "srlf/env.hpp"
#include "srlf/policy.hpp"

namespace srlf {

struct PpoConfig {
  double discount = 0.95;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int rollout_length = 2048;  // update interval
  int epochs = 10;
  int minibatch = 256;
  long total_steps = 500000;
  int hidden = 128;
  double init_log_std = -0.5;
  double max_grad_norm = 0.5;
  /// Stop the epoch loop once a minibatch's approximate KL exceeds
  /// 1.5 x target_kl; <= 0 disables the check.
  double target_kl = 0.0;
  std::uint64_t seed = 0;
  /// Abort when the mean of the last 10 episode returns drops below this
  /// after `grace_episodes` episodes.
  double divergence_floor = -std::numeric_limits<double>::infinity();
  int grace_episodes = 50;

  void validate() const;
};

/// `log_prob` is the Gaussian density of the pre-tanh sample; the squash
/// correction cancels in the probability ratio.
struct Transition {
  Observation obs = Observation::Zero();
  ActionVec action = ActionVec::Zero();
  double log_prob = 0.0;
  double reward = 0.0;
  double cost = 0.0;
  double value = 0.0;
  bool done = false;
  /// Episode ended on the time limit; `next_value` bootstraps the tail.
  bool truncated = false;
  double next_value = 0.0;
};

struct Advantages {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Generalised advantage estimation. `last_value` bootstraps a rollout that
/// stops mid-episode. Advantages are returned unnormalised.
Advantages gae(std::span<const Transition> transitions, double discount,
               double lambda, double last_value = 0.0);

/// Zero mean, unit variance (left untouched for fewer than two samples).
void normalize_advantages(Eigen::VectorXd& adv);

/// Column-per-sample training batch.
struct Batch {
  Eigen::MatrixXd obs;      // kObsDim x N
  Eigen::MatrixXd actions;  // kActDim x N, pre-tanh
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  int size() const { return static_cast<int>(obs.cols()); }
  Batch subset(std::span<const int> idx) const;
};

Batch make_batch(std::span<const Transition> transitions, const Advantages& adv);

struct SurrogateResult {
  double objective = 0.0;  // mean min(r A, clip(r) A)
  double loss = 0.0;       // -objective
  MlpGrad grad;            // d loss / d actor params
  double mean_ratio_dev = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped surrogate and its gradient by reverse-mode accumulation.
SurrogateResult surrogate(const Mlp& actor, const Batch& batch, double clip);

struct ValueLossResult {
  double loss = 0.0;  // 1/2 mean (V - R)^2
  MlpGrad grad;
};

ValueLossResult value_loss(const Mlp& critic, const Batch& batch);

struct Optimizers {
  Adam actor;
  Adam critic;

  Optimizers() = default;
  Optimizers(const PolicyParams& params, const PpoConfig& cfg);
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double first_epoch_ratio_dev = 0.0;
  int epochs_run = 0;
  bool skipped = false;
  bool stopped_early = false;
};

/// Several epochs of minibatch Adam steps on the surrogate and critic
/// losses. A non-finite loss skips the remaining steps and sets `skipped`.
UpdateStats ppo_update(PolicyParams& params, Optimizers& opt, const Batch& batch,
                       const PpoConfig& cfg, std::mt19937_64& rng);

enum class TrainMode { kPostFilter, kLearningFilter };

const char* to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct CurveRow {
  long step = 0;  // environment steps completed when the episode ended
  int episode = 0;
  double episode_return = 0.0;
  double episode_cost = 0.0;
};

std::string curves_csv(const std::vector<CurveRow>& rows);

struct TrainResult {
  PolicyParams params;
  std::vector<CurveRow> curves;
  std::vector<UpdateStats> updates;
  bool diverged = false;
  std::string message;
};

/// Training environment for `mode`: post-filter training drops the
/// obstacles and disables the filter; learning-filter training keeps both.
EnvConfig training_env_config(const EnvConfig& base, TrainMode mode);

TrainResult train(const EnvConfig& base, const PpoConfig& cfg, TrainMode mode);

}  // namespace srlf
