#pragma once

#include "lfd/context.hpp"
#include "lfd/perception.hpp"
#include "lfd/shared_control.hpp"
#include "lfd/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lfd {

enum class TaskPhase {
  RApproach1,
  RGrasp,
  RToHandoff,
  Handoff,
  LTo2,
  LPlace2,
  LGrasp2,
  LTo3,
  LPlace3,
  RGrasp3,
  RTo1,
  RPlace1,
  Done,
};

inline constexpr std::size_t kPhaseCount = 13;

std::string_view phase_name(TaskPhase p);
TaskPhase parse_phase(std::string_view name);
Arm active_arm(TaskPhase p);
bool is_transit(TaskPhase p);   // R-approach-1, R-to-handoff, L-to-2, L-to-3, R-to-1
bool is_local(TaskPhase p);     // grasp and place phases at a board site
/// Board site (1..3) the phase works at, 0 for the handoff phases and done.
int phase_site(TaskPhase p);

inline constexpr int arm_index(Arm a) { return a == Arm::Left ? 0 : 1; }

/// Board layout and kinematic limits. Lengths in metres.
struct SimConfig {
  std::array<Vec3, 3> sites{Vec3(0.030, -0.017320508075688773, 0.0), Vec3(-0.030, -0.017320508075688773, 0.0),
                            Vec3(0.0, 0.034641016151377546, 0.0)};
  Vec3 home_left{-0.060, -0.050, 0.020};
  Vec3 home_right{0.060, -0.050, 0.020};
  Vec3 handoff{0.0, -0.030, 0.015};
  double grasp_radius = 0.003;
  double place_radius = 0.003;
  double dt = 0.01;
  double tool_v_max = 0.05;
  double timeout = 120.0;
  int image_size = 64;
  double view_half_extent = 0.075;  // rendered square is +-extent around the origin
  double board_plane_height = 0.0;

  void validate() const;
  [[nodiscard]] const Vec3& site(int i) const { return sites[static_cast<std::size_t>(i - 1)]; }
};

struct ToolState {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
  bool grip = false;  // closed
};

struct PegState {
  Vec3 p = Vec3::Zero();
  std::optional<Arm> held_by;
  int site = 1;  // 0 when not seated
};

struct SimState {
  ToolState left;
  ToolState right;
  PegState peg;
  TaskPhase phase = TaskPhase::RApproach1;
  double clock = 0.0;
  std::uint64_t step = 0;

  ToolState& tool(Arm a) { return a == Arm::Left ? left : right; }
  [[nodiscard]] const ToolState& tool(Arm a) const { return a == Arm::Left ? left : right; }
};

/// Fixed tool orientations at the home poses (shaft pointing away from the board).
Quat home_orientation(Arm a);

SimState sim_init(const SimConfig& cfg, std::uint64_t seed = 0);

struct SimEvent {
  double t = 0.0;
  std::string kind;  // phase, grasp, transfer, seat, drop, clutch
  std::string detail;
};

struct StepOutcome {
  SimState state;
  std::vector<SimEvent> events;
};

/// Kinematic step: move tools (capped at tool_v_max), apply grip edges,
/// carry the held peg, advance at most one protocol phase.
StepOutcome sim_step(const SimState& state, const Command& left, const Command& right, const SimConfig& cfg);

/// Nominal target of the phase's active tool: the peg for grasp phases and
/// the handoff, a board site or the handoff point otherwise.
Vec3 phase_target(const SimState& state, const SimConfig& cfg);

/// Frame-level context label: 1 bimanual, 2 local operation, 0 move to next target.
int task_context(const SimState& state, const SimConfig& cfg);

struct RenderStyle {
  float background = 0.0f;
  float site = 0.3f;
  float marker_right = 0.55f;
  float marker_left = 0.4f;
  float peg = 1.0f;
  float shaft_right = 0.8f;
  float shaft_left = 0.65f;
  float jaw_right = 0.9f;
  float jaw_left = 0.75f;
  float gain = 1.0f;
  float noise = 0.0f;
  Vec2 offset_px = Vec2::Zero();
  std::uint64_t noise_seed = 0;

  static RenderStyle source();
  /// Perturbed renderer standing in for the real camera domain.
  static RenderStyle target();
};

/// Continuous pixel coordinates of a world point in the top-down view.
Vec2 world_to_pixel(const Vec3& p, const SimConfig& cfg, const RenderStyle& style = {});

/// Top-down grayscale frame quantized to 1/255.
Image render_observation(const SimState& state, const SimConfig& cfg, const RenderStyle& style = {});

/// Camera of the perception stand-in: board millimetres to image pixels (640x480).
PlanarTransform default_camera(const SimConfig& cfg);

/// Keypoints around the projected board sites of `cfg` as seen by `camera`.
KeypointSet scene_keypoints(const SimConfig& cfg, const PlanarTransform& camera, const KeypointConfig& kp,
                            std::uint64_t seed);

/// Rigid jitter of the board (sites and handoff point) about the origin.
SimConfig jitter_board(const SimConfig& cfg, double max_shift, double max_angle, std::uint64_t seed);

}  // namespace lfd
