#include "srlf/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace srlf {

void PpoConfig::validate() const {
  if (!(discount > 0.0 && discount < 1.0)) throw InvalidInput("ppo: discount must be in (0,1)");
  if (!(clip > 0.0 && clip < 1.0)) throw InvalidInput("ppo: clip must be in (0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw InvalidInput("ppo: gae_lambda must be in [0,1]");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw InvalidInput("ppo: learning rates must be positive");
  if (rollout_length < 1 || epochs < 1 || minibatch < 1 || hidden < 1)
    throw InvalidInput("ppo: rollout, epochs, minibatch and hidden must be >= 1");
  if (total_steps < 0) throw InvalidInput("ppo: total_steps must be >= 0");
}

Advantages gae(std::span<const Transition> tr, double discount, double lambda,
               double last_value) {
  const Eigen::Index n = static_cast<Eigen::Index>(tr.size());
  Advantages out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  double next_adv = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const Transition& x = tr[t];
    double next_value;
    double carry;
    if (x.done) {
      next_value = x.truncated ? x.next_value : 0.0;
      carry = 0.0;
    } else {
      next_value = t + 1 < n ? tr[t + 1].value : last_value;
      carry = next_adv;
    }
    const double delta = x.reward + discount * next_value - x.value;
    next_adv = delta + discount * lambda * carry;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + x.value;
  }
  return out;
}

void normalize_advantages(Eigen::VectorXd& adv) {
  if (adv.size() < 2) return;
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  adv = (adv.array() - mean) / (std::sqrt(var) + 1e-8);
}

Batch Batch::subset(std::span<const int> idx) const {
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  Batch b{Eigen::MatrixXd(obs.rows(), n), Eigen::MatrixXd(actions.rows(), n),
          Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const int i = idx[k];
    b.obs.col(k) = obs.col(i);
    b.actions.col(k) = actions.col(i);
    b.old_log_prob[k] = old_log_prob[i];
    b.advantages[k] = advantages[i];
    b.returns[k] = returns[i];
  }
  return b;
}

Batch make_batch(std::span<const Transition> tr, const Advantages& adv) {
  const Eigen::Index n = static_cast<Eigen::Index>(tr.size());
  Batch b{Eigen::MatrixXd(kObsDim, n), Eigen::MatrixXd(kActDim, n),
          Eigen::VectorXd(n), adv.advantages, adv.returns};
  for (Eigen::Index i = 0; i < n; ++i) {
    b.obs.col(i) = tr[i].obs;
    b.actions.col(i) = tr[i].action;
    b.old_log_prob[i] = tr[i].log_prob;
  }
  return b;
}

SurrogateResult surrogate(const Mlp& actor, const Batch& batch, double clip) {
  const int n = batch.size();
  Mlp::Cache cache;
  const Eigen::MatrixXd out = actor.forward(batch.obs, &cache);
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(out.rows(), n);
  SurrogateResult res;
  const double log_2pi = std::log(2.0 * kPi);
  for (int i = 0; i < n; ++i) {
    double lp = 0.0;
    for (int j = 0; j < kActDim; ++j) {
      const double raw_ls = out(kActDim + j, i);
      const double ls = std::clamp(raw_ls, kLogStdMin, kLogStdMax);
      const double z = (batch.actions(j, i) - out(j, i)) * std::exp(-ls);
      lp += -0.5 * z * z - ls - 0.5 * log_2pi;
    }
    const double log_ratio = lp - batch.old_log_prob[i];
    const double ratio = std::exp(log_ratio);
    const double a = batch.advantages[i];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
    res.objective += std::min(unclipped, clipped);
    res.mean_ratio_dev += std::abs(ratio - 1.0);
    res.approx_kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > clip) res.clip_fraction += 1.0;
    if (unclipped <= clipped) {
      // d loss / d log pi = -ratio A / n
      const double g = -unclipped / n;
      for (int j = 0; j < kActDim; ++j) {
        const double raw_ls = out(kActDim + j, i);
        const double ls = std::clamp(raw_ls, kLogStdMin, kLogStdMax);
        const double inv_var = std::exp(-2.0 * ls);
        const double diff = batch.actions(j, i) - out(j, i);
        dy(j, i) = g * diff * inv_var;
        if (raw_ls > kLogStdMin && raw_ls < kLogStdMax)
          dy(kActDim + j, i) = g * (diff * diff * inv_var - 1.0);
      }
    }
  }
  res.objective /= n;
  res.loss = -res.objective;
  res.mean_ratio_dev /= n;
  res.approx_kl /= n;
  res.clip_fraction /= n;
  res.grad = actor.backward(cache, dy);
  return res;
}

ValueLossResult value_loss(const Mlp& critic, const Batch& batch) {
  const int n = batch.size();
  Mlp::Cache cache;
  const Eigen::MatrixXd v = critic.forward(batch.obs, &cache);
  const Eigen::RowVectorXd err = v.row(0) - batch.returns.transpose();
  ValueLossResult res;
  res.loss = 0.5 * err.squaredNorm() / n;
  res.grad = critic.backward(cache, err / n);
  return res;
}

Optimizers::Optimizers(const PolicyParams& params, const PpoConfig& cfg)
    : actor(params.actor, cfg.actor_lr), critic(params.critic, cfg.critic_lr) {}

namespace {

void clip_grad(MlpGrad& g, double max_norm) {
  if (!(max_norm > 0.0)) return;
  const double norm = std::sqrt(squared_norm(g));
  if (norm > max_norm) scale(g, max_norm / norm);
}

}  // namespace

UpdateStats ppo_update(PolicyParams& params, Optimizers& opt, const Batch& batch,
                       const PpoConfig& cfg, std::mt19937_64& rng) {
  UpdateStats stats;
  const int n = batch.size();
  if (n == 0) return stats;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += cfg.minibatch) {
      const int len = std::min(cfg.minibatch, n - start);
      const Batch mb = batch.subset(std::span<const int>(order).subspan(start, len));
      SurrogateResult s = surrogate(params.actor, mb, cfg.clip);
      ValueLossResult v = value_loss(params.critic, mb);
      if (epoch == 0 && start == 0) stats.first_epoch_ratio_dev = s.mean_ratio_dev;
      if (!std::isfinite(s.loss) || !std::isfinite(v.loss)) {
        stats.skipped = true;
        return stats;
      }
      if (cfg.target_kl > 0.0 && s.approx_kl > 1.5 * cfg.target_kl) {
        stats.stopped_early = true;
        break;
      }
      clip_grad(s.grad, cfg.max_grad_norm);
      clip_grad(v.grad, cfg.max_grad_norm);
      opt.actor.step(params.actor, s.grad);
      opt.critic.step(params.critic, v.grad);
      stats.policy_loss += s.loss;
      stats.value_loss += v.loss;
      stats.approx_kl += s.approx_kl;
      stats.clip_fraction += s.clip_fraction;
      ++count;
    }
    stats.epochs_run = epoch + 1;
    if (stats.stopped_early) break;
  }
  if (count > 0) {
    stats.policy_loss /= count;
    stats.value_loss /= count;
    stats.approx_kl /= count;
    stats.clip_fraction /= count;
  }
  return stats;
}

const char* to_string(TrainMode m) {
  return m == TrainMode::kPostFilter ? "post_filter" : "learning_filter";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "post_filter" || s == "post-filter") return TrainMode::kPostFilter;
  if (s == "learning_filter" || s == "learning-filter")
    return TrainMode::kLearningFilter;
  throw InvalidInput("unknown training mode '" + s + "'");
}

std::string curves_csv(const std::vector<CurveRow>& rows) {
  std::string out = "step,episode,episode_return,episode_cost\n";
  char buf[128];
  for (const CurveRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%d,%.17g,%.17g\n", r.step, r.episode,
                  r.episode_return, r.episode_cost);
    out += buf;
  }
  return out;
}

EnvConfig training_env_config(const EnvConfig& base, TrainMode mode) {
  EnvConfig cfg = base;
  if (mode == TrainMode::kPostFilter) {
    const double ds = cfg.scene.safety_distance;
    cfg.scene = Scene::empty();
    cfg.scene.safety_distance = ds;
    cfg.mode = Mode::kOff;
  } else {
    cfg.mode = Mode::kLearningFilter;
  }
  return cfg;
}

namespace {

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  // splitmix64 finaliser over (seed, episode)
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(episode) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

TrainResult train(const EnvConfig& base, const PpoConfig& cfg, TrainMode mode) {
  cfg.validate();
  TrainResult res;
  std::mt19937_64 rng(cfg.seed);
  res.params = PolicyParams::random(rng, cfg.hidden, cfg.init_log_std);
  if (cfg.total_steps == 0) return res;

  Env env(training_env_config(base, mode));
  Optimizers opt(res.params, cfg);
  int episode = 0;
  Observation obs = env.reset(episode_seed(cfg.seed, episode));
  double ep_return = 0.0, ep_cost = 0.0;
  std::vector<Transition> buffer;
  buffer.reserve(cfg.rollout_length);

  long step = 0;
  while (step < cfg.total_steps) {
    buffer.clear();
    while (static_cast<int>(buffer.size()) < cfg.rollout_length &&
           step < cfg.total_steps) {
      const ActionSample a = act(res.params, obs, false, rng);
      Transition tr;
      tr.obs = obs;
      tr.action = a.raw;
      tr.log_prob = a.gaussian_log_prob;
      tr.value = value(res.params, obs);
      const StepResult sr = env.step(a.command);
      ++step;
      tr.reward = sr.reward;
      tr.cost = sr.cost;
      tr.done = sr.done;
      ep_return += sr.reward;
      ep_cost += sr.cost;
      obs = sr.obs;
      if (sr.done) {
        tr.truncated = true;
        tr.next_value = value(res.params, obs);
        res.curves.push_back({step, episode, ep_return, ep_cost});
        ++episode;
        ep_return = ep_cost = 0.0;
        obs = env.reset(episode_seed(cfg.seed, episode));
      }
      buffer.push_back(tr);
    }

    const double last_value = buffer.back().done ? 0.0 : value(res.params, obs);
    Advantages adv = gae(buffer, cfg.discount, cfg.gae_lambda, last_value);
    normalize_advantages(adv.advantages);
    const Batch batch = make_batch(buffer, adv);
    const UpdateStats st = ppo_update(res.params, opt, batch, cfg, rng);
    res.updates.push_back(st);

    if (!res.params.all_finite()) {
      res.diverged = true;
      res.message = "non-finite network parameters after update " +
                    std::to_string(res.updates.size());
      return res;
    }
    if (episode >= cfg.grace_episodes && res.curves.size() >= 10) {
      double recent = 0.0;
      for (std::size_t i = res.curves.size() - 10; i < res.curves.size(); ++i)
        recent += res.curves[i].episode_return;
      recent /= 10.0;
      if (recent < cfg.divergence_floor) {
        std::ostringstream os;
        os << "mean return of last 10 episodes " << recent << " below floor "
           << cfg.divergence_floor << " at step " << step;
        res.diverged = true;
        res.message = os.str();
        return res;
      }
    }
  }
  return res;
}

}  // namespace srlf
