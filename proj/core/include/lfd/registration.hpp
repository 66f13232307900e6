#pragma once

#include "lfd/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace lfd {

/// Proper rigid transform x -> R x + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  [[nodiscard]] Vec3 apply(const Vec3& p) const { return R * p + t; }
  [[nodiscard]] RigidTransform inverse() const;
  /// (this * other)(p) = this(other(p)).
  [[nodiscard]] RigidTransform operator*(const RigidTransform& other) const;
  /// Geodesic angle of R in radians.
  [[nodiscard]] double rotation_angle() const;
};

/// Least-squares rigid fit mapping P onto Q (Kabsch / SVD).
///
/// Reflections are excluded by flipping the last singular direction when
/// det(V U^T) < 0. Throws DegenerateGeometryError for fewer than three
/// points or a cross-covariance of rank < 2.
RigidTransform kabsch_rotation(std::span<const Vec3> P, std::span<const Vec3> Q);

struct IcpConfig {
  int max_iter = 100;
  double tol = 1e-9;  // stop when RMSE improves by less than this (m)
};

struct IcpResult {
  RigidTransform transform;            // maps source points onto target
  std::vector<double> residual_history;  // nearest-neighbour RMSE, non-increasing
};

/// Point-to-point ICP on tool positions with nearest-neighbour
/// correspondences. Runs from a centroid match and from a Kabsch fit of
/// samples paired by sequence fraction, keeping the lower final residual.
IcpResult icp_align(const Trajectory& source, const Trajectory& target, const IcpConfig& cfg = {});
IcpResult icp_align(std::span<const Vec3> source, std::span<const Vec3> target, const IcpConfig& cfg = {});

/// Monotone, continuous warping path from (0,0) to (n-1, m-1).
struct WarpPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  /// True when the path is a valid warp for series of lengths n and m.
  [[nodiscard]] bool is_valid(std::size_t n, std::size_t m) const;
};

struct DtwResult {
  WarpPath path;
  double cost = 0.0;
};

/// Dynamic time warping with Euclidean point distance and the symmetric
/// unit-step pattern. Rows of `a` and `b` are samples.
DtwResult dtw_align(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
DtwResult dtw_align(std::span<const Vec3> a, std::span<const Vec3> b);

/// Resample `traj` onto the reference timeline described by `ref_times`
/// using a warping path whose first index refers to `traj` and whose second
/// refers to the reference.
Trajectory warp_to_reference(const Trajectory& traj, std::span<const double> ref_times,
                             const WarpPath& path);

struct RegistrationConfig {
  IcpConfig icp;
};

/// Demonstrations of one arm registered onto the medoid demonstration.
struct RegisteredDemoSet {
  Arm arm = Arm::Right;
  std::size_t reference_index = 0;
  std::vector<Trajectory> demos;
  std::vector<RigidTransform> transforms;
  std::vector<double> warp_costs;

  [[nodiscard]] std::size_t sample_count() const { return demos.empty() ? 0 : demos.front().size(); }
};

/// Index of the demo minimizing the summed DTW cost to all others
/// (lowest index on ties), together with the pairwise cost matrix.
std::pair<std::size_t, Eigen::MatrixXd> dtw_medoid(std::span<const Trajectory> demos);

/// Pick the medoid as reference, then ICP-align and DTW-warp every other
/// demo onto it. All demos must belong to the same arm.
RegisteredDemoSet register_demos(std::span<const Trajectory> demos, const RegistrationConfig& cfg = {});

}  // namespace lfd
