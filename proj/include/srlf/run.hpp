#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "srlf/env.hpp"
#include "srlf/invariants.hpp"
#include "srlf/policy.hpp"
#include "srlf/ppo.hpp"

namespace srlf {

inline constexpr int kConfigSchemaVersion = 1;

struct ControllerConfig {
  std::string type = "pd";  // "pd" or "ppo"
  PdGains gains;
  std::string checkpoint;   // required for "ppo"
};

struct RunConfig {
  Scene scene = Scene::paper();
  BarrierParams barrier;  // D_s comes from the scene, d_bar from the disturbance
  double norm_max = 5.0;
  double w_max = kPi / 3.0;
  bool inscribed_box = true;
  DisturbanceModel disturbance;
  Mode mode = Mode::kPostFilter;
  ControllerConfig controller;
  int episodes = 1;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  ConstraintForm constraint_form = ConstraintForm::kExact;
  double slack_weight = 1e6;
  int horizon = 500;
  double dt = 0.05;
  Vec3 start_offset = Vec3::Zero();
  PpoConfig ppo;

  EnvConfig env_config() const;
  /// Seed of episode i: seeds[i], continuing upward past the list's end.
  std::uint64_t episode_seed(int i) const;
  void validate() const;
};

/// Throws InvalidInput naming the offending JSON path; unknown keys are
/// rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Tracking controller selected by the config.
class Controller {
 public:
  explicit Controller(const RunConfig& cfg);
  ControlCommand operator()(const Env& env, const Observation& obs) const;

 private:
  ControllerConfig cfg_;
  std::optional<PolicyParams> policy_;
};

EpisodeLog run_episode(const RunConfig& cfg, const Controller& controller,
                       std::uint64_t seed);

struct RolloutResult {
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeLog> logs;
  nlohmann::json report;
  std::vector<std::string> artifacts;
  int exit_code = 0;  // 0 iff no radius breach
};

/// Aggregate statistics recomputed from per-episode summaries.
nlohmann::json aggregate(const std::vector<EpisodeSummary>& summaries,
                         const std::vector<double>& filter_seconds);

RolloutResult run_rollout(const RunConfig& cfg, bool write_files = true);

struct TrainRunResult {
  std::vector<TrainResult> runs;
  std::vector<std::string> artifacts;
  int exit_code = 0;  // nonzero when any seed diverged
};

TrainRunResult run_train(const RunConfig& cfg, bool write_files = true);

struct CheckResult {
  std::vector<SuiteResult> suites;
  nlohmann::json report;
  int exit_code = 0;
};

CheckResult run_check(std::uint64_t seed, bool quick = false);

struct BenchResult {
  std::vector<double> seconds;
  double p50 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double problem_checksum = 0.0;
  nlohmann::json report;
};

BenchResult run_qp_bench(long n, std::uint64_t seed,
                         ConstraintForm form = ConstraintForm::kExact);

/// Nearest-rank percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace srlf
