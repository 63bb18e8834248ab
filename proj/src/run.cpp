#include "srlf/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "srlf/checkpoint.hpp"
#include "srlf/oracles.hpp"

namespace srlf {

using nlohmann::json;

namespace {

/// Walks one JSON object, remembering which keys were read so that
/// leftovers can be rejected with their full path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw InvalidInput("config: " + path_ + (key.empty() ? "" : "/" + key) + ": " + what);
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        fail(key, "wrong type");
      }
    }
  }

  void read_number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void read_vec3(const std::string& key, Vec3& out) {
    if (const json* v = get(key)) {
      if (!v->is_array() || v->size() != 3) fail(key, "expected a 3-element array");
      for (int i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) fail(key, "expected numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

const char* kind_name(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::kNone: return "none";
    case DisturbanceKind::kUniform: return "uniform";
    case DisturbanceKind::kConstant: return "constant";
  }
  return "?";
}

}  // namespace

EnvConfig RunConfig::env_config() const {
  EnvConfig env;
  env.scene = scene;
  env.filter.barrier = barrier;
  env.filter.barrier.safety_distance = scene.safety_distance;
  env.filter.barrier.d_bar = disturbance.d_bar;
  env.filter.limits = inscribed_box ? SaturationLimits::inscribed(norm_max, w_max)
                                    : SaturationLimits::literal_box(norm_max, w_max);
  env.filter.form = constraint_form;
  env.filter.slack_weight = slack_weight;
  env.disturbance = disturbance;
  env.mode = mode;
  env.dt = dt;
  env.horizon = horizon;
  env.start_offset = start_offset;
  return env;
}

std::uint64_t RunConfig::episode_seed(int i) const {
  if (i < static_cast<int>(seeds.size())) return seeds[i];
  return seeds.back() + static_cast<std::uint64_t>(i - static_cast<int>(seeds.size()) + 1);
}

void RunConfig::validate() const {
  env_config().validate();
  if (episodes < 0) throw InvalidInput("config: /episodes must be >= 0");
  if (seeds.empty()) throw InvalidInput("config: /seeds must not be empty");
  if (controller.type != "pd" && controller.type != "ppo")
    throw InvalidInput("config: /controller/type must be 'pd' or 'ppo'");
  if (controller.type == "ppo" && controller.checkpoint.empty())
    throw InvalidInput("config: /controller/checkpoint required for ppo");
  ppo.validate();
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  ObjectReader root(j, "");
  int version = -1;
  root.read("schema_version", version);
  if (version != kConfigSchemaVersion)
    root.fail("schema_version", "must be " + std::to_string(kConfigSchemaVersion));

  if (const json* s = root.get("scene")) {
    if (s->is_string()) {
      const auto name = s->get<std::string>();
      if (name == "paper") cfg.scene = Scene::paper();
      else if (name == "empty") cfg.scene = Scene::empty();
      else root.fail("scene", "unknown scene '" + name + "'");
    } else {
      ObjectReader r(*s, root.child("scene"));
      cfg.scene = Scene::empty();
      r.read("name", cfg.scene.name);
      r.read_number("safety_distance", cfg.scene.safety_distance);
      if (const json* obs = r.get("obstacles")) {
        if (!obs->is_array()) r.fail("obstacles", "expected an array");
        for (std::size_t i = 0; i < obs->size(); ++i) {
          ObjectReader o((*obs)[i], r.child("obstacles") + "/" + std::to_string(i));
          Obstacle ob;
          o.read_vec3("center", ob.center);
          o.read_number("radius", ob.radius);
          o.read_vec3("velocity", ob.velocity);
          o.finish();
          cfg.scene.obstacles.push_back(ob);
        }
      }
      r.finish();
    }
  }
  if (const json* b = root.get("barrier")) {
    ObjectReader r(*b, root.child("barrier"));
    r.read_number("delta", cfg.barrier.delta);
    r.read_number("rho", cfg.barrier.rho);
    r.read_number("gamma", cfg.barrier.gamma);
    r.finish();
  }
  if (const json* s = root.get("saturation")) {
    ObjectReader r(*s, root.child("saturation"));
    r.read_number("norm_max", cfg.norm_max);
    r.read_number("w_max", cfg.w_max);
    std::string box = cfg.inscribed_box ? "inscribed" : "literal";
    r.read("box", box);
    if (box != "inscribed" && box != "literal") r.fail("box", "must be 'inscribed' or 'literal'");
    cfg.inscribed_box = box == "inscribed";
    r.finish();
  }
  if (const json* d = root.get("disturbance")) {
    ObjectReader r(*d, root.child("disturbance"));
    std::string kind = kind_name(cfg.disturbance.kind);
    r.read("kind", kind);
    if (kind == "none") cfg.disturbance.kind = DisturbanceKind::kNone;
    else if (kind == "uniform") cfg.disturbance.kind = DisturbanceKind::kUniform;
    else if (kind == "constant") cfg.disturbance.kind = DisturbanceKind::kConstant;
    else r.fail("kind", "must be none, uniform or constant");
    r.read_number("d_bar", cfg.disturbance.d_bar);
    r.read_vec3("constant", cfg.disturbance.constant);
    r.finish();
  }
  if (const json* m = root.get("mode")) {
    try {
      cfg.mode = mode_from_string(m->get<std::string>());
    } catch (const std::exception& e) {
      root.fail("mode", e.what());
    }
  }
  if (const json* c = root.get("controller")) {
    ObjectReader r(*c, root.child("controller"));
    r.read("type", cfg.controller.type);
    r.read_number("kp", cfg.controller.gains.kp);
    r.read_number("kv", cfg.controller.gains.kv);
    r.read_number("kyaw", cfg.controller.gains.kyaw);
    r.read("checkpoint", cfg.controller.checkpoint);
    r.finish();
  }
  root.read("episodes", cfg.episodes);
  root.read("seeds", cfg.seeds);
  root.read("output_dir", cfg.output_dir);
  if (const json* f = root.get("constraint_form")) {
    try {
      cfg.constraint_form = constraint_form_from_string(f->get<std::string>());
    } catch (const std::exception& e) {
      root.fail("constraint_form", e.what());
    }
  }
  root.read_number("slack_weight", cfg.slack_weight);
  root.read("horizon", cfg.horizon);
  root.read_number("dt", cfg.dt);
  root.read_vec3("start_offset", cfg.start_offset);
  if (const json* p = root.get("ppo")) {
    ObjectReader r(*p, root.child("ppo"));
    PpoConfig& c = cfg.ppo;
    r.read_number("discount", c.discount);
    r.read_number("gae_lambda", c.gae_lambda);
    r.read_number("clip", c.clip);
    r.read_number("actor_lr", c.actor_lr);
    r.read_number("critic_lr", c.critic_lr);
    r.read("rollout_length", c.rollout_length);
    r.read("epochs", c.epochs);
    r.read("minibatch", c.minibatch);
    r.read("total_steps", c.total_steps);
    r.read("hidden", c.hidden);
    r.read_number("init_log_std", c.init_log_std);
    r.read_number("max_grad_norm", c.max_grad_norm);
    r.read_number("target_kl", c.target_kl);
    r.read_number("divergence_floor", c.divergence_floor);
    r.read("grace_episodes", c.grace_episodes);
    r.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& cfg) {
  json obstacles = json::array();
  for (const Obstacle& o : cfg.scene.obstacles)
    obstacles.push_back({{"center", vec_json(o.center)},
                         {"radius", o.radius},
                         {"velocity", vec_json(o.velocity)}});
  json ppo = {{"discount", cfg.ppo.discount},
              {"gae_lambda", cfg.ppo.gae_lambda},
              {"clip", cfg.ppo.clip},
              {"actor_lr", cfg.ppo.actor_lr},
              {"critic_lr", cfg.ppo.critic_lr},
              {"rollout_length", cfg.ppo.rollout_length},
              {"epochs", cfg.ppo.epochs},
              {"minibatch", cfg.ppo.minibatch},
              {"total_steps", cfg.ppo.total_steps},
              {"hidden", cfg.ppo.hidden},
              {"init_log_std", cfg.ppo.init_log_std},
              {"max_grad_norm", cfg.ppo.max_grad_norm},
              {"target_kl", cfg.ppo.target_kl},
              {"grace_episodes", cfg.ppo.grace_episodes}};
  // JSON has no infinities; an absent floor means "never abort".
  if (std::isfinite(cfg.ppo.divergence_floor))
    ppo["divergence_floor"] = cfg.ppo.divergence_floor;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"scene",
       {{"name", cfg.scene.name},
        {"safety_distance", cfg.scene.safety_distance},
        {"obstacles", obstacles}}},
      {"barrier",
       {{"delta", cfg.barrier.delta}, {"rho", cfg.barrier.rho}, {"gamma", cfg.barrier.gamma}}},
      {"saturation",
       {{"norm_max", cfg.norm_max},
        {"w_max", cfg.w_max},
        {"box", cfg.inscribed_box ? "inscribed" : "literal"}}},
      {"disturbance",
       {{"kind", kind_name(cfg.disturbance.kind)},
        {"d_bar", cfg.disturbance.d_bar},
        {"constant", vec_json(cfg.disturbance.constant)}}},
      {"mode", to_string(cfg.mode)},
      {"controller",
       {{"type", cfg.controller.type},
        {"kp", cfg.controller.gains.kp},
        {"kv", cfg.controller.gains.kv},
        {"kyaw", cfg.controller.gains.kyaw},
        {"checkpoint", cfg.controller.checkpoint}}},
      {"episodes", cfg.episodes},
      {"seeds", cfg.seeds},
      {"output_dir", cfg.output_dir},
      {"constraint_form", to_string(cfg.constraint_form)},
      {"slack_weight", cfg.slack_weight},
      {"horizon", cfg.horizon},
      {"dt", cfg.dt},
      {"start_offset", vec_json(cfg.start_offset)},
      {"ppo", ppo},
  };
}

Controller::Controller(const RunConfig& cfg) : cfg_(cfg.controller) {
  if (cfg_.type == "ppo") policy_ = load_checkpoint(cfg_.checkpoint);
}

ControlCommand Controller::operator()(const Env& env, const Observation& obs) const {
  if (policy_) {
    std::mt19937_64 unused(0);
    return act(*policy_, obs, true, unused).command;
  }
  const State& s = env.state();
  return pd_baseline(s, reference(s.t), cfg_.gains,
                     SaturationLimits::literal_box(env.config().filter.limits.u_norm_max,
                                                   env.config().filter.limits.w_max));
}

EpisodeLog run_episode(const RunConfig& cfg, const Controller& controller,
                       std::uint64_t seed) {
  Env env(cfg.env_config());
  Observation obs = env.reset(seed);
  while (!env.done()) obs = env.step(controller(env, obs)).obs;
  return env.log();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q * static_cast<double>(values.size()));
  const std::size_t idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size()))) - 1;
  return values[idx];
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json summary_json(const EpisodeSummary& s) {
  return {{"steps", s.steps},
          {"return", s.total_return},
          {"cost", s.total_cost},
          {"ds_breaches", s.ds_breaches},
          {"radius_breaches", s.radius_breaches},
          {"min_distance", finite_or_null(s.min_distance)},
          {"min_b", finite_or_null(s.min_b)},
          {"rms_tracking_error", s.rms_tracking_error},
          {"tracking_samples", s.tracking_samples},
          {"relaxed_steps", s.relaxed_steps},
          {"degraded_steps", s.degraded_steps}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

}  // namespace

json aggregate(const std::vector<EpisodeSummary>& summaries,
               const std::vector<double>& filter_seconds) {
  std::vector<double> ds, radius, dmin, rms, ret;
  int total_radius = 0, total_ds = 0, relaxed = 0, degraded = 0;
  double overall_min = std::numeric_limits<double>::infinity();
  for (const EpisodeSummary& s : summaries) {
    ds.push_back(s.ds_breaches);
    radius.push_back(s.radius_breaches);
    dmin.push_back(s.min_distance);
    rms.push_back(s.rms_tracking_error);
    ret.push_back(s.total_return);
    total_radius += s.radius_breaches;
    total_ds += s.ds_breaches;
    relaxed += s.relaxed_steps;
    degraded += s.degraded_steps;
    overall_min = std::min(overall_min, s.min_distance);
  }
  return {{"episodes", summaries.size()},
          {"radius_breaches_total", total_radius},
          {"ds_breaches_total", total_ds},
          {"radius_breaches_median", median(radius)},
          {"radius_breaches_mean", mean(radius)},
          {"ds_breaches_median", median(ds)},
          {"ds_breaches_mean", mean(ds)},
          {"min_distance", finite_or_null(overall_min)},
          {"min_distance_median", finite_or_null(median(dmin))},
          {"rms_tracking_error_mean", mean(rms)},
          {"return_mean", mean(ret)},
          {"relaxed_steps", relaxed},
          {"degraded_steps", degraded},
          {"filter_seconds_p50", percentile(filter_seconds, 0.5)},
          {"filter_seconds_p99", percentile(filter_seconds, 0.99)}};
}

RolloutResult run_rollout(const RunConfig& cfg, bool write_files) {
  cfg.validate();
  const Controller controller(cfg);
  RolloutResult res;
  std::filesystem::path dir(cfg.output_dir);
  if (write_files) std::filesystem::create_directories(dir);

  std::vector<EpisodeSummary> summaries;
  std::vector<double> timings;
  json per_seed = json::array();
  for (int i = 0; i < cfg.episodes; ++i) {
    const std::uint64_t seed = cfg.episode_seed(i);
    EpisodeLog log = run_episode(cfg, controller, seed);
    summaries.push_back(log.summary);
    timings.insert(timings.end(), log.filter_seconds.begin(), log.filter_seconds.end());
    per_seed.push_back({{"seed", seed}, {"summary", summary_json(log.summary)}});
    if (write_files) {
      const auto path = dir / ("episode_" + std::to_string(i) + "_seed" + std::to_string(seed) + ".csv");
      write_text(path, episode_csv(log));
      res.artifacts.push_back(path.string());
    }
    if (log.summary.radius_breaches > 0) res.exit_code = 1;
    res.seeds.push_back(seed);
    res.logs.push_back(std::move(log));
  }
  res.report = {{"command", "rollout"},
                {"config", to_json(cfg)},
                {"episodes", per_seed},
                {"aggregate", aggregate(summaries, timings)}};
  if (write_files) {
    const auto path = dir / "report.json";
    res.artifacts.push_back(path.string());
    res.report["artifacts"] = res.artifacts;
    write_text(path, res.report.dump(2) + "\n");
  } else {
    res.report["artifacts"] = res.artifacts;
  }
  return res;
}

TrainRunResult run_train(const RunConfig& cfg, bool write_files) {
  cfg.validate();
  if (cfg.mode == Mode::kOff)
    throw InvalidInput("train: mode must be post_filter or learning_filter");
  const TrainMode mode = cfg.mode == Mode::kPostFilter ? TrainMode::kPostFilter
                                                       : TrainMode::kLearningFilter;
  TrainRunResult res;
  std::filesystem::path dir(cfg.output_dir);
  if (write_files) std::filesystem::create_directories(dir);
  const EnvConfig env = cfg.env_config();
  const int runs = std::max(cfg.episodes, 1);
  for (int i = 0; i < runs; ++i) {
    PpoConfig pc = cfg.ppo;
    pc.seed = cfg.episode_seed(i);
    TrainResult tr = train(env, pc, mode);
    if (write_files) {
      const std::string stem = std::string(to_string(mode)) + "_seed" + std::to_string(pc.seed);
      const auto curves = dir / ("curves_" + stem + ".csv");
      const auto ckpt = dir / ("checkpoint_" + stem + ".json");
      write_text(curves, curves_csv(tr.curves));
      save_checkpoint(ckpt.string(), tr.params);
      res.artifacts.push_back(curves.string());
      res.artifacts.push_back(ckpt.string());
    }
    if (tr.diverged) res.exit_code = 2;
    res.runs.push_back(std::move(tr));
  }
  return res;
}

CheckResult run_check(std::uint64_t seed, bool quick) {
  CheckResult res;
  res.suites = run_all_suites(seed, quick);
  res.report = json::array();
  for (const SuiteResult& s : res.suites) {
    res.report.push_back({{"suite", s.suite},
                          {"cases", s.cases},
                          {"max_residual", s.max_residual},
                          {"threshold", s.threshold},
                          {"pass", s.pass},
                          {"detail", s.detail}});
    if (!s.pass) res.exit_code = 1;
  }
  return res;
}

BenchResult run_qp_bench(long n, std::uint64_t seed, ConstraintForm form) {
  if (n <= 0) throw InvalidInput("qp-bench: n must be positive");
  std::mt19937_64 rng(seed);
  FilterConfig cfg;
  cfg.form = form;
  BenchResult res;
  json rows = json::array();
  for (long k = 0; k < n; ++k) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    res.problem_checksum += sc.u_r.sum() + sc.state.p.sum() + sc.state.v.sum();
    for (const Obstacle& o : sc.obstacles) res.problem_checksum += o.center.sum();
    const auto t0 = std::chrono::steady_clock::now();
    const FilterOutcome out = filter(sc.state, sc.obstacles, {sc.u_r, 0.0}, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    const double dt = std::chrono::duration<double>(t1 - t0).count();
    res.seconds.push_back(dt);
    rows.push_back({{"index", k},
                    {"status", to_string(out.status)},
                    {"iterations", out.qp_iterations},
                    {"seconds", dt}});
  }
  res.p50 = percentile(res.seconds, 0.5);
  res.p99 = percentile(res.seconds, 0.99);
  res.max = *std::max_element(res.seconds.begin(), res.seconds.end());
  res.report = {{"command", "qp-bench"},
                {"n", n},
                {"seed", seed},
                {"constraint_form", to_string(form)},
                {"problem_checksum", res.problem_checksum},
                {"p50_seconds", res.p50},
                {"p99_seconds", res.p99},
                {"max_seconds", res.max},
                {"solves", rows}};
  return res;
}

}  // namespace srlf
