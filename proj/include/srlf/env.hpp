#pragma once

#include <array>
#include <string>
#include <vector>

#include "srlf/barrier.hpp"
#include "srlf/dynamics.hpp"
#include "srlf/filter.hpp"

namespace srlf {

/// Figure-8 reference: p_r = [sin(wt), sin(2wt)/2, 1] with w = 2 pi / 25.
struct Reference {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();  // feed-forward acceleration
  double yaw = 0.0;       // heading along the velocity
};

inline constexpr double kReferencePeriod = 25.0;

Reference reference(double t);

/// exp(-1.8 (||p - p_r||^2 + wrap(yaw - yaw_r)^2)), never below 1e-300.
double reward(const State& s, const Reference& ref);

struct Scene {
  std::string name = "paper";
  std::vector<Obstacle> obstacles;
  double safety_distance = 0.15;

  /// Three static spheres of radius 0.1 m on the reference path.
  static Scene paper();
  static Scene empty();
  void validate() const;
};

enum class Mode { kOff, kPostFilter, kLearningFilter };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

inline constexpr int kObsDim = 14;
using Observation = Eigen::Matrix<double, kObsDim, 1>;

/// [p, v, yaw, p_r, v_r, yaw_r].
Observation make_observation(const State& s, const Reference& ref);

struct EnvConfig {
  Scene scene = Scene::paper();
  FilterConfig filter;
  DisturbanceModel disturbance;
  Mode mode = Mode::kPostFilter;
  double dt = 0.05;
  int horizon = 500;
  Vec3 start_offset = Vec3::Zero();

  void validate() const;
};

/// One environment step. State, reference and barrier values describe the
/// state the filter acted on; distance, reward and cost describe the state
/// the step produced.
struct LogRow {
  double t = 0.0;
  State state;
  Reference ref;
  ControlCommand u_r;
  Vec3 u_f = Vec3::Zero();
  ControlCommand u_final;
  double b = 0.0;
  double b_min = 0.0;
  double d_min = 0.0;      // min_i ||p_i - p|| after the step
  double clearance = 0.0;  // min_i (||p_i - p|| - radius_i) after the step
  FilterStatus status = FilterStatus::kOptimal;
  double slack = 0.0;
  double reward = 0.0;
  double cost = 0.0;
};

struct EpisodeSummary {
  int steps = 0;
  double total_return = 0.0;
  double total_cost = 0.0;
  int ds_breaches = 0;
  int radius_breaches = 0;
  double min_distance = 0.0;
  double min_b = 0.0;
  double rms_tracking_error = 0.0;
  int tracking_samples = 0;
  int relaxed_steps = 0;
  int degraded_steps = 0;

  bool operator==(const EpisodeSummary&) const = default;
};

EpisodeSummary summarize(const std::vector<LogRow>& rows, double safety_distance);

struct EpisodeLog {
  std::vector<LogRow> rows;
  /// Wall-clock filter latency per step [s]; not part of the CSV.
  std::vector<double> filter_seconds;
  EpisodeSummary summary;
};

/// Column order of the episode CSV.
const std::array<const char*, 32>& episode_csv_columns();
std::string episode_csv(const EpisodeLog& log);

struct StepResult {
  Observation obs;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
  FilterOutcome outcome;
};

class Env {
 public:
  explicit Env(EnvConfig cfg);

  Observation reset(std::uint64_t seed);
  StepResult step(const ControlCommand& u_r);

  const State& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  const EpisodeLog& log() const { return log_; }
  int steps() const { return steps_; }
  bool done() const { return steps_ >= cfg_.horizon; }

 private:
  EnvConfig cfg_;
  FilterConfig active_filter_;
  State state_;
  Rng rng_;
  int steps_ = 0;
  bool reset_ = false;
  EpisodeLog log_;
};

}  // namespace srlf
