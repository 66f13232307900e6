#pragma once

#include "lfd/registration.hpp"
#include "lfd/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lfd {

/// Squared-exponential kernel hyperparameters.
struct GprHyper {
  double lengthscale = 0.1;  // normalized-time units
  double signal_var = 1e-3;  // m^2
  double noise_var = 1e-8;   // m^2

  void validate() const;
  bool operator==(const GprHyper&) const = default;
};

/// k(x, x') = signal_var * exp(-(x - x')^2 / (2 lengthscale^2)).
double se_kernel(double x, double x_prime, const GprHyper& hyper);

/// Diagonal jitter escalation used when K + noise I is not numerically PD.
/// Jitter starts at `initial_rel * signal_var` and grows by 10x up to
/// `max_rel * signal_var`. `max_rel == 0` disables jitter.
struct JitterPolicy {
  double initial_rel = 1e-10;
  double max_rel = 1e-4;
};

/// Zero-mean GP posterior with a cached Cholesky factor. Built by gpr_fit;
/// immutable afterwards.
struct GprModel {
  std::vector<double> inputs;
  std::vector<double> targets;
  GprHyper hyper;
  double jitter = 0.0;      // diagonal jitter that made the factorization succeed
  Eigen::MatrixXd chol;     // lower factor of K + (noise + jitter) I
  Eigen::VectorXd alpha;    // (K + (noise + jitter) I)^-1 f

  [[nodiscard]] std::size_t size() const { return inputs.size(); }
};

struct GprPrediction {
  std::vector<double> mean;
  std::vector<double> variance;  // clamped at 0
  double min_raw_variance = 0.0;  // smallest value before clamping
};

/// Factorize K + noise_var I. Throws NotPositiveDefiniteError when the
/// factorization fails at every jitter level of `jitter`.
GprModel gpr_fit(std::span<const double> x, std::span<const double> f, const GprHyper& hyper,
                 const JitterPolicy& jitter = {});

GprPrediction gpr_predict(const GprModel& model, std::span<const double> x_star);

double log_marginal_likelihood(const GprModel& model);

/// Log-spaced search grid for optimize_hyper.
struct HyperGrid {
  std::vector<double> lengthscales;
  std::vector<double> signal_vars;
  std::vector<double> noise_vars;

  /// l in [0.01, 1] x7, signal in [1e-6, 1e-2] x7, noise in [1e-10, 1e-4] x5.
  static HyperGrid standard();
};

std::vector<double> log_space(double lo, double hi, std::size_t n);

/// Grid point with the largest log marginal likelihood; the first grid point
/// (lengthscale-major order) wins ties. Non-PD grid points are skipped.
GprHyper optimize_hyper(std::span<const double> x, std::span<const double> f,
                        const HyperGrid& grid = HyperGrid::standard());

/// Positional reference of one arm on a normalized time grid.
struct ArmDesiredTrajectory {
  Arm arm = Arm::Right;
  Eigen::MatrixX3d mean;      // G x 3
  Eigen::MatrixX3d variance;  // G x 3, >= 0
  std::array<GprHyper, 3> hyper;
  Vec3 offset = Vec3::Zero();  // per-dimension target mean added back to the posterior
  double duration = 0.0;       // reference demo duration (s)
};

struct DesiredTrajectory {
  std::vector<double> grid;  // strictly increasing in [0, 1]
  std::vector<ArmDesiredTrajectory> arms;

  [[nodiscard]] const ArmDesiredTrajectory& arm(Arm a) const;
};

struct DesiredFitOptions {
  std::size_t grid_n = 200;
  /// Fixed hyperparameters for every dimension; optimized per dimension when unset.
  std::optional<GprHyper> hyper;
  /// Training points taken per demo (evenly spaced); 0 keeps every sample.
  std::size_t points_per_demo = 25;
  /// Cap on pooled points used for the hyperparameter search.
  std::size_t max_hyper_points = 150;
  JitterPolicy jitter;
};

/// One independent GP per dimension on (normalized time, coordinate) pooled
/// over every registered demo; targets are centered per dimension.
ArmDesiredTrajectory fit_arm_trajectory(const RegisteredDemoSet& set, const DesiredFitOptions& opts = {});

DesiredTrajectory fit_desired_trajectory(std::span<const RegisteredDemoSet> sets,
                                         const DesiredFitOptions& opts = {});

}  // namespace lfd
