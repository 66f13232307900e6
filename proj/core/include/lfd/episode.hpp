#pragma once

#include "lfd/context.hpp"
#include "lfd/dmp.hpp"
#include "lfd/gpr.hpp"
#include "lfd/human.hpp"
#include "lfd/perception.hpp"
#include "lfd/registration.hpp"
#include "lfd/shared_control.hpp"
#include "lfd/sim.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lfd {

enum class RunMode { Manual, Autonomous, Shared };

std::string_view run_mode_name(RunMode m);
/// Accepts manual, auto, autonomous, shared.
RunMode parse_run_mode(std::string_view s);

struct EpisodeModels {
  std::map<TaskPhase, DmpModel> dmps;  // robot reference per phase; straight line when absent
  std::optional<Classifier> classifier;
};

struct EpisodeConfig {
  SimConfig sim;
  BlendConfig blend;
  RenderStyle style;
  KeypointConfig keypoints;
  GmmConfig gmm;
  std::size_t frame_period = 5;  // control steps per classified camera frame
  double dmp_dt = 2e-3;
};

struct StepRecord {
  double clock = 0.0;
  TaskPhase phase = TaskPhase::RApproach1;
  std::array<Vec3, 2> master{Vec3::Zero(), Vec3::Zero()};
  std::array<bool, 2> engaged{true, true};
  std::array<Vec3, 2> dPh{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> dPr{Vec3::Zero(), Vec3::Zero()};
  double alpha = 1.0;
  bool framed = false;        // a camera frame was classified on this step
  ContextProbs probs{0.0, 0.0, 0.0};
  int context = -1;           // classifier label on framed steps, else -1
  int oracle = 0;             // task_context of the pre-step state
  ControlMode mode = ControlMode::Manual;
  std::array<Vec3, 2> tool{Vec3::Zero(), Vec3::Zero()};
  std::array<bool, 2> grip{false, false};
  Vec3 peg = Vec3::Zero();
  int peg_holder = -1;        // arm_index or -1
  int peg_site = 1;

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeLog {
  RunMode mode = RunMode::Manual;
  std::uint64_t seed = 0;
  double dt = 0.01;
  bool success = false;
  std::array<Vec3, 3> perceived_sites{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::vector<StepRecord> steps;  // steps[0] is the initial state
  std::vector<SimEvent> events;
};

/// Closed-loop episode driven one control step at a time by operator input,
/// so scripted agents and live sessions share the same loop: classify the
/// frame (shared mode), update alpha, take the robot increment, compose
/// commands and step the simulator.
class EpisodeRunner {
 public:
  EpisodeRunner(RunMode mode, const EpisodeModels& models, const EpisodeConfig& cfg, std::uint64_t seed);

  const StepRecord& step(const HumanInput& input);

  [[nodiscard]] bool finished() const;
  [[nodiscard]] const SimState& state() const { return state_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] const ContextProbs& probs() const { return probs_; }
  [[nodiscard]] const EpisodeLog& log() const { return log_; }
  [[nodiscard]] std::span<const Vec3> reference() const { return reference_; }
  [[nodiscard]] const EpisodeConfig& config() const { return cfg_; }
  [[nodiscard]] RunMode mode() const { return mode_; }

 private:
  void enter_phase();
  Vec3 robot_goal() const;
  StepRecord snapshot() const;

  RunMode mode_;
  const EpisodeModels& models_;
  EpisodeConfig cfg_;
  SimState state_;
  RoleState role_;
  double alpha_ = 1.0;
  ContextProbs probs_{1.0, 0.0, 0.0};
  std::vector<Vec3> reference_;
  std::size_t progress_ = 0;
  std::array<Vec3, 2> master_{Vec3::Zero(), Vec3::Zero()};
  EpisodeLog log_;
};

EpisodeLog run_episode(RunMode mode, const EpisodeModels& models, const EpisodeConfig& cfg,
                       const HumanAgentConfig& agent, std::uint64_t seed);

struct Metrics {
  double M = 0.0;  // master path length (m)
  double T = 0.0;  // completion time (s)
  double A = 0.0;  // mean tool speed (mm/s)
  std::size_t C = 0;  // clutch count

  bool operator==(const Metrics&) const = default;
};

/// M sums engaged master increments of both arms, A the tool-tip path of
/// both arms over T, C counts disengaged -> engaged transitions.
Metrics compute_metrics(const EpisodeLog& log);

struct DemoTrial {
  Trajectory left;
  Trajectory right;
  Dataset frames;
  bool success = false;
};

struct DemoGenConfig {
  std::size_t sample_every = 5;           // trajectory samples at 20 Hz
  std::size_t frame_every = 10;           // labelled frames
  std::size_t frame_every_bimanual = 2;   // denser frames around the handoff
  double jitter_shift = 0.003;            // board placement jitter (m)
  double jitter_angle = 0.087;            // rad
  RenderStyle style;
};

/// Manual-mode scripted trials on jittered boards; trial i uses derive_seed(seed, i).
std::vector<DemoTrial> generate_demos(std::size_t n, const EpisodeConfig& cfg, const HumanAgentConfig& agent,
                                      std::uint64_t seed, const DemoGenConfig& gen = {});

/// One DMP per robot-assisted phase, fitted on the desired trajectory between
/// the reference demo's gripper toggles (stationary ends trimmed).
std::map<TaskPhase, DmpModel> fit_phase_dmps(const DesiredTrajectory& desired, std::span<const RegisteredDemoSet> sets,
                                             const DmpParams& params, double still_tol = 1e-3);

}  // namespace lfd
