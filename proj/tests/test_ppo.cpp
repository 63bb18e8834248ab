#include <cmath>
#include <random>

#include <doctest.h>

#include "srlf/ppo.hpp"

using namespace srlf;

namespace {

std::vector<Transition> constant_rewards(int n, double r) {
  std::vector<Transition> tr(n);
  for (Transition& t : tr) t.reward = r;
  tr.back().done = true;
  return tr;
}

Batch random_batch(const PolicyParams& p, std::mt19937_64& rng, int n, double jitter) {
  std::uniform_real_distribution<double> u(-1, 1);
  Batch b{Eigen::MatrixXd(kObsDim, n), Eigen::MatrixXd(kActDim, n), Eigen::VectorXd(n),
          Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    Observation o;
    for (int k = 0; k < kObsDim; ++k) o[k] = u(rng);
    const ActionSample a = act(p, o, false, rng);
    b.obs.col(i) = o;
    b.actions.col(i) = a.raw;
    b.old_log_prob[i] = a.gaussian_log_prob + jitter * u(rng);
    b.advantages[i] = u(rng);
    b.returns[i] = 3.0 * u(rng);
  }
  return b;
}

template <typename Loss>
double fd_check(Mlp& net, const MlpGrad& g, Loss loss) {
  Eigen::VectorXd analytic(net.num_params());
  Eigen::Index k = 0;
  for (const auto& l : g) {
    analytic.segment(k, l.w.size()) = Eigen::Map<const Eigen::VectorXd>(l.w.data(), l.w.size());
    k += l.w.size();
    analytic.segment(k, l.b.size()) = l.b;
    k += l.b.size();
  }
  const Eigen::VectorXd theta = net.flat();
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd t = theta;
    t[i] += h;
    net.set_flat(t);
    const double up = loss();
    t[i] -= 2 * h;
    net.set_flat(t);
    const double down = loss();
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(std::abs(fd) + std::abs(analytic[i]), 1e-6));
  }
  net.set_flat(theta);
  return worst;
}

}  // namespace

TEST_CASE("gae: zero rewards and values") {
  const Advantages a = gae(constant_rewards(5, 0.0), 0.99, 0.95, 0.0);
  CHECK(a.advantages.norm() == 0.0);
}

TEST_CASE("gae: single terminal transition") {
  const Advantages a = gae(constant_rewards(1, 1.0), 0.99, 0.95, 0.0);
  CHECK(a.advantages[0] == 1.0);
  CHECK(a.returns[0] == 1.0);
}

TEST_CASE("gae: discounted returns over three steps") {
  const Advantages a = gae(constant_rewards(3, 1.0), 0.99, 1.0, 0.0);
  CHECK(a.returns[0] == doctest::Approx(2.9701).epsilon(1e-12));
  CHECK(a.returns[1] == doctest::Approx(1.99).epsilon(1e-12));
  CHECK(a.returns[2] == doctest::Approx(1.0));
}

TEST_CASE("gae: truncation bootstraps from the next value") {
  auto tr = constant_rewards(1, 1.0);
  tr[0].truncated = true;
  tr[0].next_value = 10.0;
  CHECK(gae(tr, 0.9, 0.95, 0.0).returns[0] == doctest::Approx(10.0));
  auto open = constant_rewards(2, 0.0);
  open.back().done = false;
  CHECK(gae(open, 0.5, 1.0, 4.0).returns[0] == doctest::Approx(1.0));
}

TEST_CASE("advantage normalisation") {
  Eigen::VectorXd a(4);
  a << 1, 2, 3, 4;
  normalize_advantages(a);
  CHECK(std::abs(a.mean()) < 1e-12);
  CHECK((a.array().square().mean()) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("surrogate at ratio one is the mean advantage") {
  std::mt19937_64 rng(1);
  const PolicyParams p = PolicyParams::random(rng, 16);
  const Batch b = random_batch(p, rng, 32, 0.0);
  const SurrogateResult s = surrogate(p.actor, b, 0.2);
  CHECK(s.objective == doctest::Approx(b.advantages.mean()).epsilon(1e-12));
  CHECK(s.mean_ratio_dev < 1e-12);
  CHECK(s.clip_fraction == 0.0);
}

TEST_CASE("clip saturation zeroes the gradient") {
  std::mt19937_64 rng(2);
  const PolicyParams p = PolicyParams::random(rng, 16);
  Batch b = random_batch(p, rng, 8, 0.0);
  // ratio = 1 + 2 clip with positive advantage: clipped branch.
  b.old_log_prob.array() -= std::log(1.4);
  b.advantages.setConstant(1.0);
  const SurrogateResult s = surrogate(p.actor, b, 0.2);
  CHECK(squared_norm(s.grad) == 0.0);
  CHECK(s.objective == doctest::Approx(1.2));
}

TEST_CASE("surrogate and critic gradients match finite differences") {
  std::mt19937_64 rng(3);
  PolicyParams p = PolicyParams::random(rng, 12);
  const Batch b = random_batch(p, rng, 16, 0.05);
  const SurrogateResult s = surrogate(p.actor, b, 0.2);
  CHECK(fd_check(p.actor, s.grad, [&] { return surrogate(p.actor, b, 0.2).loss; }) < 1e-4);
  const ValueLossResult v = value_loss(p.critic, b);
  CHECK(fd_check(p.critic, v.grad, [&] { return value_loss(p.critic, b).loss; }) < 1e-4);
}

TEST_CASE("full-size gradient check") {
  std::mt19937_64 rng(4);
  PolicyParams p = PolicyParams::random(rng, 128);
  const Batch b = random_batch(p, rng, 4, 0.05);
  const SurrogateResult s = surrogate(p.actor, b, 0.2);
  CHECK(fd_check(p.actor, s.grad, [&] { return surrogate(p.actor, b, 0.2).loss; }) < 1e-4);
}

TEST_CASE("first epoch is on-policy and updates change parameters") {
  std::mt19937_64 rng(5);
  PolicyParams p = PolicyParams::random(rng, 16);
  const Batch b = random_batch(p, rng, 64, 0.0);
  PpoConfig cfg;
  cfg.minibatch = 16;
  cfg.epochs = 2;
  Optimizers opt(p, cfg);
  const Eigen::VectorXd before = p.actor.flat();
  const UpdateStats st = ppo_update(p, opt, b, cfg, rng);
  CHECK(st.first_epoch_ratio_dev < 1e-6);
  CHECK_FALSE(st.skipped);
  CHECK((p.actor.flat() - before).norm() > 0.0);
}

TEST_CASE("non-finite loss skips the update") {
  std::mt19937_64 rng(6);
  PolicyParams p = PolicyParams::random(rng, 8);
  Batch b = random_batch(p, rng, 8, 0.0);
  b.returns[0] = NAN;
  PpoConfig cfg;
  Optimizers opt(p, cfg);
  const Eigen::VectorXd before = p.critic.flat();
  CHECK(ppo_update(p, opt, b, cfg, rng).skipped);
  CHECK(p.critic.flat() == before);
}

TEST_CASE("zero steps returns the initial parameters") {
  PpoConfig cfg;
  cfg.total_steps = 0;
  cfg.seed = 9;
  const TrainResult r = train(EnvConfig{}, cfg, TrainMode::kPostFilter);
  std::mt19937_64 rng(9);
  const PolicyParams p = PolicyParams::random(rng, cfg.hidden, cfg.init_log_std);
  CHECK(r.params.actor.flat() == p.actor.flat());
  CHECK(r.curves.empty());
}

TEST_CASE("short training is deterministic and logs curves") {
  PpoConfig cfg;
  cfg.total_steps = 1500;
  cfg.rollout_length = 500;
  cfg.minibatch = 100;
  cfg.epochs = 2;
  cfg.hidden = 16;
  cfg.seed = 4;
  const TrainResult a = train(EnvConfig{}, cfg, TrainMode::kPostFilter);
  const TrainResult b = train(EnvConfig{}, cfg, TrainMode::kPostFilter);
  REQUIRE(a.curves.size() == 3);
  CHECK(curves_csv(a.curves) == curves_csv(b.curves));
  CHECK(a.curves[0].step == 500);
  CHECK(curves_csv(a.curves).rfind("step,episode,episode_return,episode_cost\n", 0) == 0);
}

TEST_CASE("learning-filter training keeps the obstacles and the filter") {
  const EnvConfig post = training_env_config(EnvConfig{}, TrainMode::kPostFilter);
  CHECK(post.scene.obstacles.empty());
  CHECK(post.mode == Mode::kOff);
  const EnvConfig learn = training_env_config(EnvConfig{}, TrainMode::kLearningFilter);
  CHECK(learn.scene.obstacles.size() == 3);
  CHECK(learn.mode == Mode::kLearningFilter);
}

TEST_CASE("divergence floor aborts with a message") {
  PpoConfig cfg;
  cfg.total_steps = 20000;
  cfg.rollout_length = 500;
  cfg.minibatch = 100;
  cfg.epochs = 1;
  cfg.hidden = 8;
  cfg.grace_episodes = 10;
  cfg.divergence_floor = 1e9;
  const TrainResult r = train(EnvConfig{}, cfg, TrainMode::kPostFilter);
  CHECK(r.diverged);
  CHECK_FALSE(r.message.empty());
  CHECK(r.curves.size() < 40);
}
