#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lfd {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

enum class Arm { Left, Right };

std::string_view arm_name(Arm arm);
Arm parse_arm(std::string_view name);

/// One tool sample: time, tip position, orientation and gripper state
/// (`grip == true` means closed).
struct TrajectorySample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
  bool grip = false;
};

/// Time-stamped tool path of one arm.
///
/// Invariants (checked by validate()): at least two samples, strictly
/// increasing timestamps, unit quaternions.
struct Trajectory {
  Arm arm = Arm::Right;
  std::vector<TrajectorySample> samples;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] bool empty() const { return samples.empty(); }
  [[nodiscard]] double duration() const;
  [[nodiscard]] std::vector<Vec3> positions() const;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

}  // namespace lfd
