#pragma once

#include "lfd/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <vector>

namespace lfd {

/// Transformation/canonical system constants and kernel layout.
///
/// The transformation system is
///   gamma * x'' = alpha_z (beta_z (g - x) - gamma x') + diag(g - x0) F(s)
/// clocked by the canonical system gamma * s' = -alpha_x s.
struct DmpParams {
  double alpha_z = 25.0;
  double beta_z = 6.25;
  double alpha_x = 8.0;
  double gamma = 1.0;           // temporal scaling (s), the motion duration
  std::vector<double> centers;  // descending in phase
  std::vector<double> widths;   // h_i > 0

  [[nodiscard]] std::size_t kernel_count() const { return centers.size(); }
  /// Stiffness alpha_z * beta_z / gamma of the equivalent spring-damper.
  [[nodiscard]] double stiffness() const { return alpha_z * beta_z / gamma; }
  /// Damping alpha_z of the equivalent spring-damper.
  [[nodiscard]] double damping() const { return alpha_z; }

  void validate() const;
};

/// Centers at the phase of N times uniform in [0, gamma]; widths
/// h_i = 1 / (2 (c_{i+1} - c_i)^2), the last width copied from its neighbour.
DmpParams make_dmp_params(std::size_t n_kernels = 50, double gamma = 1.0, double alpha_z = 25.0,
                          double beta_z = 6.25, double alpha_x = 8.0);

struct DmpModel {
  DmpParams params;
  Eigen::MatrixX3d weights;  // N x 3
  Vec3 x0 = Vec3::Zero();
  Vec3 g = Vec3::Zero();
  /// Dimensions whose demo amplitude |g - x0| fell below the threshold; their
  /// forcing term is disabled.
  std::array<bool, 3> degenerate{false, false, false};
  Arm arm = Arm::Right;
};

struct DmpState {
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double s = 1.0;
  double t = 0.0;
};

/// Demo amplitude below which a dimension is degenerate (m).
inline constexpr double kDegenerateAmplitude = 1e-4;

enum class DegeneratePolicy {
  Flag,    // flag degenerate dimensions; error only if every dimension is degenerate
  Strict,  // error on any degenerate dimension
};

/// s(t) = exp(-alpha_x t / gamma).
double phase_at(double t, const DmpParams& params);

/// Psi_i(s) = exp(-h_i (s - c_i)^2).
Eigen::VectorXd basis(double s, const DmpParams& params);

/// F(s) = s * sum_i w_i Psi_i(s) / sum_i Psi_i(s), per dimension.
Vec3 forcing(const DmpModel& model, double s);

/// Learn forcing weights from one demonstration by locally weighted
/// regression. `params.gamma` is replaced by the demo duration.
DmpModel fit_weights(const Trajectory& demo, const DmpParams& params,
                     DegeneratePolicy policy = DegeneratePolicy::Flag);

/// Fixed-step RK4 integration toward a new start/goal with gamma = duration,
/// from rest at phase 1. `horizon` (defaults to duration) bounds the
/// integration time; the final state is always included.
std::vector<DmpState> rollout_states(const DmpModel& model, const Vec3& start, const Vec3& goal,
                                     double duration, double dt, double horizon = -1.0);

Trajectory rollout(const DmpModel& model, const Vec3& start, const Vec3& goal, double duration,
                   double dt = 1e-3, double horizon = -1.0);

}  // namespace lfd
