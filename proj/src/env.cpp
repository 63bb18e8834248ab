#include "srlf/env.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace srlf {

Reference reference(double t) {
  constexpr double w = 2.0 * kPi / kReferencePeriod;
  const double s1 = std::sin(w * t), c1 = std::cos(w * t);
  const double s2 = std::sin(2.0 * w * t), c2 = std::cos(2.0 * w * t);
  Reference r;
  r.p = {s1, 0.5 * s2, 1.0};
  r.v = {w * c1, w * c2, 0.0};
  r.a = {-w * w * s1, -2.0 * w * w * s2, 0.0};
  r.yaw = std::atan2(r.v.y(), r.v.x());
  return r;
}

double reward(const State& s, const Reference& ref) {
  const double yaw_err = wrap_angle(s.yaw - ref.yaw);
  const double err = (s.p - ref.p).squaredNorm() + yaw_err * yaw_err;
  return std::max(std::exp(-1.8 * err), 1e-300);
}

Scene Scene::paper() {
  Scene s;
  s.name = "paper";
  s.safety_distance = 0.15;
  s.obstacles = {{Vec3(1.0, 0.0, 1.0), 0.1, Vec3::Zero()},
                 {Vec3(0.5, std::sqrt(3.0) / 4.0, 1.0), 0.1, Vec3::Zero()},
                 {Vec3(-1.0, 0.0, 1.0), 0.1, Vec3::Zero()}};
  return s;
}

Scene Scene::empty() {
  Scene s;
  s.name = "empty";
  return s;
}

void Scene::validate() const {
  if (!(safety_distance > 0.0)) throw InvalidInput("scene: D_s must be positive");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Obstacle& o = obstacles[i];
    if (!o.center.allFinite() || !o.velocity.allFinite())
      throw InvalidInput("scene: non-finite obstacle");
    if (!(o.radius > 0.0 && o.radius < safety_distance))
      throw InvalidInput("scene: obstacle radius must lie in (0, D_s)");
    for (std::size_t j = 0; j < i; ++j)
      if (!((o.center - obstacles[j].center).norm() > 2.0 * safety_distance))
        throw InvalidInput("scene: obstacles closer than 2 D_s");
  }
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kOff: return "off";
    case Mode::kPostFilter: return "post_filter";
    case Mode::kLearningFilter: return "learning_filter";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "off") return Mode::kOff;
  if (s == "post_filter" || s == "post-filter") return Mode::kPostFilter;
  if (s == "learning_filter" || s == "learning-filter")
    return Mode::kLearningFilter;
  throw InvalidInput("unknown mode '" + s + "'");
}

Observation make_observation(const State& s, const Reference& ref) {
  Observation o;
  o << s.p, s.v, s.yaw, ref.p, ref.v, ref.yaw;
  return o;
}

void EnvConfig::validate() const {
  scene.validate();
  filter.validate();
  disturbance.validate();
  if (!(dt > 0.0)) throw InvalidInput("env: dt must be positive");
  if (horizon < 1) throw InvalidInput("env: horizon must be >= 1");
  if (!start_offset.allFinite()) throw InvalidInput("env: bad start offset");
  if (std::abs(filter.barrier.safety_distance - scene.safety_distance) > 1e-15)
    throw InvalidInput("env: barrier D_s differs from scene D_s");
}

EpisodeSummary summarize(const std::vector<LogRow>& rows,
                         double safety_distance) {
  EpisodeSummary s;
  s.steps = static_cast<int>(rows.size());
  s.min_distance = std::numeric_limits<double>::infinity();
  s.min_b = std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (const LogRow& r : rows) {
    s.total_return += r.reward;
    s.total_cost += r.cost;
    if (r.d_min < safety_distance) ++s.ds_breaches;
    if (r.clearance < 0.0) ++s.radius_breaches;
    s.min_distance = std::min(s.min_distance, r.d_min);
    s.min_b = std::min(s.min_b, r.b);
    if (r.status == FilterStatus::kRelaxed) ++s.relaxed_steps;
    if (r.status == FilterStatus::kDegraded) ++s.degraded_steps;
    if (r.b_min > 1.0) {
      sq += (r.state.p - r.ref.p).squaredNorm();
      ++s.tracking_samples;
    }
  }
  if (s.tracking_samples > 0) s.rms_tracking_error = std::sqrt(sq / s.tracking_samples);
  return s;
}

const std::array<const char*, 32>& episode_csv_columns() {
  static const std::array<const char*, 32> cols = {
      "t",   "px",   "py",   "pz",   "vx",   "vy",     "vz",    "yaw",
      "prx", "pry",  "prz",  "vrx",  "vry",  "vrz",    "yawr",  "urx",
      "ury", "urz",  "ufx",  "ufy",  "ufz",  "ux",     "uy",    "uz",
      "wc",  "b",    "bmin", "dmin", "qp_status", "slack", "reward", "cost"};
  return cols;
}

namespace {

void put(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

void put(std::string& out, const Vec3& v) {
  for (int i = 0; i < 3; ++i) {
    put(out, v[i]);
    out += ',';
  }
}

}  // namespace

std::string episode_csv(const EpisodeLog& log) {
  std::string out;
  const auto& cols = episode_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  for (const LogRow& r : log.rows) {
    put(out, r.t);
    out += ',';
    put(out, r.state.p);
    put(out, r.state.v);
    put(out, r.state.yaw);
    out += ',';
    put(out, r.ref.p);
    put(out, r.ref.v);
    put(out, r.ref.yaw);
    out += ',';
    put(out, r.u_r.accel);
    put(out, r.u_f);
    put(out, r.u_final.accel);
    put(out, r.u_final.yaw_rate);
    out += ',';
    put(out, r.b);
    out += ',';
    put(out, r.b_min);
    out += ',';
    put(out, r.d_min);
    out += ',';
    out += to_string(r.status);
    out += ',';
    put(out, r.slack);
    out += ',';
    put(out, r.reward);
    out += ',';
    put(out, r.cost);
    out += '\n';
  }
  return out;
}

Env::Env(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  active_filter_ = cfg_.filter;
  active_filter_.enabled = cfg_.mode != Mode::kOff;
}

Observation Env::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const Reference r0 = reference(0.0);
  state_ = State{r0.p + cfg_.start_offset, r0.v, r0.yaw, 0.0};
  steps_ = 0;
  reset_ = true;
  log_ = EpisodeLog{};
  log_.rows.reserve(cfg_.horizon);
  log_.filter_seconds.reserve(cfg_.horizon);
  return make_observation(state_, r0);
}

StepResult Env::step(const ControlCommand& u_r) {
  if (!reset_) throw InvalidInput("env: step before reset");
  if (done()) throw InvalidInput("env: episode already finished");

  // Obstacles translate at constant velocity from their t = 0 centres.
  std::vector<Obstacle> obstacles = cfg_.scene.obstacles;
  for (Obstacle& o : obstacles) o.center += o.velocity * state_.t;
  const auto t0 = std::chrono::steady_clock::now();
  FilterOutcome outcome = filter(state_, obstacles, u_r, active_filter_);
  const auto t1 = std::chrono::steady_clock::now();

  const Vec3 mu = sample_disturbance(cfg_.disturbance, rng_);
  const State next = srlf::step(state_, outcome.u_final, mu, cfg_.dt);
  const Reference ref_next = reference(next.t);

  LogRow row;
  row.t = state_.t;
  row.state = state_;
  row.ref = reference(state_.t);
  row.u_r = u_r;
  row.u_f = outcome.u_f;
  row.u_final = outcome.u_final;
  row.b = outcome.b;
  row.b_min = outcome.b_min;
  row.status = outcome.status;
  row.slack = outcome.slack;
  row.d_min = std::numeric_limits<double>::infinity();
  row.clearance = std::numeric_limits<double>::infinity();
  for (const Obstacle& o : obstacles) {
    const double d = (o.center + o.velocity * cfg_.dt - next.p).norm();
    row.d_min = std::min(row.d_min, d);
    row.clearance = std::min(row.clearance, d - o.radius);
  }
  row.reward = reward(next, ref_next);
  row.cost = row.d_min < cfg_.scene.safety_distance ? 1.0 : 0.0;

  log_.rows.push_back(row);
  log_.filter_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  state_ = next;
  ++steps_;

  StepResult res;
  res.obs = make_observation(state_, ref_next);
  res.reward = row.reward;
  res.cost = row.cost;
  res.done = done();
  res.outcome = std::move(outcome);
  if (res.done) log_.summary = summarize(log_.rows, cfg_.scene.safety_distance);
  return res;
}

}  // namespace srlf
