#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "srlf/env.hpp"
#include "srlf/policy.hpp"

using namespace srlf;

namespace {

ControlCommand pd(const Env& env) {
  return pd_baseline(env.state(), reference(env.state().t));
}

EpisodeLog run(EnvConfig cfg, std::uint64_t seed) {
  Env env(cfg);
  env.reset(seed);
  while (!env.done()) env.step(pd(env));
  return env.log();
}

LogRow row_at(double d_min, double clearance) {
  LogRow r;
  r.d_min = d_min;
  r.clearance = clearance;
  r.b = r.b_min = 5.0;
  r.reward = 1.0;
  return r;
}

}  // namespace

TEST_CASE("reference hand values") {
  const Reference r0 = reference(0.0);
  CHECK(r0.p.isApprox(Vec3(0, 0, 1)));
  const Reference r1 = reference(6.25);
  CHECK((r1.p - Vec3(1, 0, 1)).norm() < 1e-12);
  const Reference r2 = reference(12.5);
  CHECK((r2.p - Vec3(0, 0, 1)).norm() < 1e-12);
  const double w = 2 * kPi / 25;
  CHECK(r0.v.isApprox(Vec3(w, w, 0)));
  CHECK(r0.yaw == doctest::Approx(kPi / 4));
}

TEST_CASE("reference derivatives are exact") {
  for (double t : {0.3, 4.0, 9.7, 17.2, 23.9}) {
    const double h = 1e-6;
    const Reference a = reference(t - h), b = reference(t + h), r = reference(t);
    CHECK(((b.p - a.p) / (2 * h) - r.v).norm() < 1e-8);
    CHECK(((b.v - a.v) / (2 * h) - r.a).norm() < 1e-8);
    CHECK(r.yaw == doctest::Approx(std::atan2(r.v.y(), r.v.x())));
  }
}

TEST_CASE("reference is periodic") {
  for (double t = 0.0; t < 25.0; t += 0.37) {
    const Reference a = reference(t), b = reference(t + kReferencePeriod);
    REQUIRE((a.p - b.p).norm() < 1e-12);
    REQUIRE((a.v - b.v).norm() < 1e-12);
    REQUIRE(std::abs(wrap_angle(a.yaw - b.yaw)) < 1e-12);
  }
}

TEST_CASE("reward values") {
  const Reference r = reference(0.0);
  State s{r.p, r.v, r.yaw, 0.0};
  CHECK(reward(s, r) == 1.0);
  s.p += Vec3(1, 0, 0);
  CHECK(reward(s, r) == doctest::Approx(0.16530).epsilon(1e-4));
  s.p = r.p + Vec3(0.1, 0, 0);
  CHECK(reward(s, r) == doctest::Approx(0.98216).epsilon(1e-5));
  s.p = r.p + Vec3(10, 0, 0);
  CHECK(reward(s, r) > 0.0);
  CHECK(reward(s, r) == doctest::Approx(std::exp(-180.0)).epsilon(1e-12));
  s.p = r.p + Vec3(30, 0, 0);
  CHECK(reward(s, r) == 1e-300);
  s.p = r.p;
  s.yaw = r.yaw + 2 * kPi;
  CHECK(reward(s, r) == doctest::Approx(1.0));
}

TEST_CASE("paper scene") {
  const Scene s = Scene::paper();
  REQUIRE(s.obstacles.size() == 3);
  CHECK(s.obstacles[0].center.isApprox(Vec3(1, 0, 1)));
  CHECK(s.obstacles[1].center.isApprox(Vec3(0.5, std::sqrt(3.0) / 4, 1)));
  CHECK(s.obstacles[2].center.isApprox(Vec3(-1, 0, 1)));
  for (const Obstacle& o : s.obstacles) CHECK(o.radius == 0.1);
  CHECK(s.safety_distance == 0.15);
  Scene crowded = s;
  crowded.obstacles[1].center = Vec3(1.2, 0, 1);
  CHECK_THROWS_AS(crowded.validate(), InvalidInput);
}

TEST_CASE("reset and hover stream") {
  EnvConfig cfg;
  cfg.scene = Scene::empty();
  cfg.mode = Mode::kOff;
  cfg.disturbance.kind = DisturbanceKind::kNone;
  Env env(cfg);
  const Observation o = env.reset(0);
  CHECK(o.size() == 14);
  CHECK(o.segment<3>(0) == o.segment<3>(7));
  CHECK(env.state().v.isApprox(reference(0).v));
}

TEST_CASE("offset start gives the expected first reward") {
  EnvConfig cfg;
  cfg.scene = Scene::empty();
  cfg.mode = Mode::kOff;
  cfg.disturbance.kind = DisturbanceKind::kNone;
  cfg.start_offset = Vec3(0.1, 0, 0);
  Env env(cfg);
  env.reset(0);
  const State s = env.state();
  CHECK(reward(s, reference(0)) == doctest::Approx(0.98216).epsilon(1e-5));
}

TEST_CASE("episode ends at exactly 500 steps") {
  EnvConfig cfg;
  Env env(cfg);
  env.reset(3);
  int steps = 0;
  bool done = false;
  while (!done) {
    const StepResult r = env.step(pd(env));
    done = r.done;
    ++steps;
    REQUIRE((done == (steps == 500)));
  }
  CHECK(env.log().rows.size() == 500);
  CHECK_THROWS_AS(env.step({}), InvalidInput);
}

TEST_CASE("summary breach thresholds") {
  std::vector<LogRow> rows{row_at(0.5, 0.4), row_at(0.12, 0.02), row_at(0.3, 0.2)};
  const EpisodeSummary s = summarize(rows, 0.15);
  CHECK(s.ds_breaches == 1);
  CHECK(s.radius_breaches == 0);
  CHECK(s.min_distance == doctest::Approx(0.12));
  rows.push_back(row_at(0.05, -0.05));
  const EpisodeSummary t = summarize(rows, 0.15);
  CHECK(t.ds_breaches == 2);
  CHECK(t.radius_breaches == 1);
}

TEST_CASE("rms error away from obstacles") {
  std::vector<LogRow> rows(4);
  for (LogRow& r : rows) {
    r.ref.p = Vec3(0, 0, 1);
    r.state.p = Vec3(0.05, 0, 1);
    r.b = r.b_min = 3.0;
    r.d_min = 10.0;
  }
  rows[1].state.p = Vec3(2, 0, 1);
  rows[1].b_min = 0.5;  // near an obstacle: excluded
  const EpisodeSummary s = summarize(rows, 0.15);
  CHECK(s.rms_tracking_error == doctest::Approx(0.05));
  CHECK(s.tracking_samples == 3);
}

TEST_CASE("unfiltered pd flies through the obstacles") {
  EnvConfig cfg;
  cfg.mode = Mode::kOff;
  const EpisodeLog log = run(cfg, 1);
  CHECK(log.summary.ds_breaches >= 1);
  CHECK(log.summary.radius_breaches >= 1);
  CHECK(log.summary.total_cost == log.summary.ds_breaches);
}

TEST_CASE("filtered pd stays clear of the obstacles") {
  const EpisodeLog log = run(EnvConfig{}, 1);
  CHECK(log.summary.radius_breaches == 0);
  CHECK(log.summary.ds_breaches == 0);
  CHECK(log.summary.total_cost == 0.0);
  CHECK(log.summary.min_distance > 0.15);
  for (const LogRow& r : log.rows) {
    REQUIRE(r.u_final.accel.norm() <= 5.0);
    REQUIRE(std::abs(r.u_final.yaw_rate) <= kPi / 3.0);
  }
}

TEST_CASE("pd tracks the figure eight without obstacles") {
  EnvConfig cfg;
  cfg.scene = Scene::empty();
  cfg.mode = Mode::kOff;
  cfg.disturbance.kind = DisturbanceKind::kNone;
  const EpisodeLog log = run(cfg, 0);
  CHECK(log.summary.rms_tracking_error < 0.05);
  CHECK(log.summary.tracking_samples == 500);
}

TEST_CASE("episodes are reproducible and the summary is recomputable") {
  const EpisodeLog a = run(EnvConfig{}, 7);
  const EpisodeLog b = run(EnvConfig{}, 7);
  CHECK(episode_csv(a) == episode_csv(b));
  CHECK(summarize(a.rows, 0.15) == a.summary);
  const EpisodeLog c = run(EnvConfig{}, 8);
  CHECK(episode_csv(a) != episode_csv(c));
}

TEST_CASE("csv header and row count") {
  const EpisodeLog log = run(EnvConfig{}, 2);
  const std::string csv = episode_csv(log);
  std::string header;
  for (const char* c : episode_csv_columns()) header += std::string(header.empty() ? "" : ",") + c;
  CHECK(csv.substr(0, csv.find('\n')) == header);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 501);
  CHECK(header.rfind("t,px,py,pz", 0) == 0);
  CHECK(header.size() - header.rfind("reward,cost") == std::string("reward,cost").size());
}

TEST_CASE("moving obstacles translate with time") {
  EnvConfig cfg;
  cfg.scene = Scene::empty();
  cfg.scene.obstacles.push_back({Vec3(3, 0, 1), 0.1, Vec3(-0.5, 0, 0)});
  cfg.disturbance.kind = DisturbanceKind::kNone;
  Env env(cfg);
  env.reset(0);
  env.step({});
  const LogRow& r = env.log().rows[0];
  const Vec3 centre = Vec3(3, 0, 1) + Vec3(-0.5, 0, 0) * 0.05;
  CHECK(r.d_min == doctest::Approx((centre - env.state().p).norm()));
}

TEST_CASE("config checks") {
  EnvConfig cfg;
  cfg.filter.barrier.safety_distance = 0.2;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = EnvConfig{};
  cfg.dt = 0.0;
  CHECK_THROWS_AS(Env{cfg}, InvalidInput);
  Env env(EnvConfig{});
  CHECK_THROWS_AS(env.step({}), InvalidInput);
  CHECK(mode_from_string("post_filter") == Mode::kPostFilter);
  CHECK_THROWS_AS(mode_from_string("nope"), InvalidInput);
}
