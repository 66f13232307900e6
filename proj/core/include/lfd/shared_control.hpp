#pragma once

#include "lfd/context.hpp"
#include "lfd/types.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace lfd {

struct BlendConfig {
  double tau = 0.5;     // motion scaling, slave/master
  double lambda = 0.5;  // context-change threshold
  double v_max = 0.1;   // robot speed cap (m/s)

  void validate() const;
};

/// Context memory for the role-adaptation law. Starts in full human authority.
struct RoleState {
  int prev_context = 0;
  double alpha = 1.0;
};

struct AlphaUpdate {
  double alpha = 1.0;
  RoleState state;
  double delta_pc = 0.0;  // P(c = c(t)) - P(c = c(t-1)), both from the current probs
  int context = 0;
};

/// Role adaptation: with c(t) the argmax of `probs` and dP the probability
/// margin over the previous context,
///   dP <  lambda, c(t) in {1,2}: alpha = P(c(t-1))
///   dP <  lambda, c(t) == 0:     alpha = 1 - P(c(t-1))
///   dP >= lambda, c(t) in {1,2}: alpha = 1
///   dP >= lambda, c(t) == 0:     alpha = 0
AlphaUpdate compute_alpha(const ContextProbs& probs, const RoleState& state, double lambda);

/// tau * (alpha * dPh + (1 - alpha) * dPr)
Vec3 blend(const Vec3& dPh, const Vec3& dPr, double alpha, double tau);

enum class ControlMode { Manual, Autonomous, AdaptiveShared };

std::string_view mode_name(ControlMode m);
ControlMode mode_of(double alpha);

struct Command {
  Vec3 dP = Vec3::Zero();
  Quat q = Quat::Identity();
  bool grip = false;
};

/// Scales `v` down to norm `cap` when it is longer; direction preserved.
Vec3 cap_norm(const Vec3& v, double cap);

struct RobotIncrement {
  Vec3 dPr = Vec3::Zero();
  std::size_t progress = 0;
};

/// Nearest reference point at or after `progress` (monotone), then a step
/// toward the following point capped at v_max * dt.
RobotIncrement robot_increment(std::span<const Vec3> ref, const Vec3& pose, std::size_t progress,
                               const BlendConfig& cfg, double dt);

/// Position from the blend (capped at v_max * dt); orientation and grip are
/// always the operator's.
Command compose_command(const Command& human, const Vec3& dPr, double alpha, const BlendConfig& cfg, double dt);

/// Points at uniform arc-length spacing along a polyline, endpoints kept.
std::vector<Vec3> resample_path(std::span<const Vec3> points, double spacing);

}  // namespace lfd
