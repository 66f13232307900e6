#include "lfd/gpr.hpp"

#include "lfd/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lfd {

void GprHyper::validate() const {
  if (!std::isfinite(lengthscale) || !std::isfinite(signal_var) || !std::isfinite(noise_var))
    throw InvalidArgument("GprHyper: non-finite hyperparameter");
  if (lengthscale <= 0.0 || signal_var <= 0.0 || noise_var < 0.0)
    throw InvalidArgument("GprHyper: lengthscale and signal_var must be > 0, noise_var >= 0");
}

double se_kernel(double x, double x_prime, const GprHyper& hyper) {
  const double d = x - x_prime;
  return hyper.signal_var * std::exp(-d * d / (2.0 * hyper.lengthscale * hyper.lengthscale));
}

namespace {

// Cholesky with a pivot floor: Eigen's LLT accepts pivots that are pure
// rounding noise, so tiny pivots relative to the diagonal count as failure.
bool try_cholesky(const Eigen::MatrixXd& A, Eigen::MatrixXd& L) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  const double max_diag = A.diagonal().maxCoeff();
  const double min_pivot = L.diagonal().array().square().minCoeff();
  return min_pivot > 1e-14 * max_diag;
}

}  // namespace

GprModel gpr_fit(std::span<const double> x, std::span<const double> f, const GprHyper& hyper,
                 const JitterPolicy& jitter) {
  hyper.validate();
  if (x.size() != f.size()) throw InvalidArgument("gpr_fit: inputs and targets differ in length");
  if (x.empty()) throw InsufficientDataError("gpr_fit: need at least one training point");

  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = se_kernel(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)], hyper);
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  K.diagonal().array() += hyper.noise_var;

  std::vector<double> levels{0.0};
  if (jitter.max_rel > 0.0) {
    for (double rel = jitter.initial_rel; rel <= jitter.max_rel * (1.0 + 1e-9); rel *= 10.0)
      levels.push_back(rel * hyper.signal_var);
  }

  GprModel model;
  model.inputs.assign(x.begin(), x.end());
  model.targets.assign(f.begin(), f.end());
  model.hyper = hyper;
  for (double level : levels) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += level;
    if (try_cholesky(A, model.chol)) {
      model.jitter = level;
      const Eigen::Map<const Eigen::VectorXd> fv(f.data(), n);
      model.alpha = model.chol.transpose().triangularView<Eigen::Upper>().solve(
          model.chol.triangularView<Eigen::Lower>().solve(fv));
      return model;
    }
  }
  throw NotPositiveDefiniteError("gpr_fit: covariance not positive definite after jitter escalation");
}

GprPrediction gpr_predict(const GprModel& model, std::span<const double> x_star) {
  const auto n = static_cast<Eigen::Index>(model.size());
  GprPrediction out;
  out.mean.resize(x_star.size());
  out.variance.resize(x_star.size());
  out.min_raw_variance = std::numeric_limits<double>::infinity();

  Eigen::VectorXd k(n);
  for (std::size_t s = 0; s < x_star.size(); ++s) {
    for (Eigen::Index i = 0; i < n; ++i)
      k(i) = se_kernel(x_star[s], model.inputs[static_cast<std::size_t>(i)], model.hyper);
    out.mean[s] = k.dot(model.alpha);
    const Eigen::VectorXd v = model.chol.triangularView<Eigen::Lower>().solve(k);
    const double raw = model.hyper.signal_var - v.squaredNorm();
    out.min_raw_variance = std::min(out.min_raw_variance, raw);
    out.variance[s] = std::max(raw, 0.0);
  }
  if (x_star.empty()) out.min_raw_variance = 0.0;
  return out;
}

double log_marginal_likelihood(const GprModel& model) {
  const auto n = static_cast<Eigen::Index>(model.size());
  const Eigen::Map<const Eigen::VectorXd> f(model.targets.data(), n);
  const double data_fit = -0.5 * f.dot(model.alpha);
  const double complexity = -model.chol.diagonal().array().log().sum();
  return data_fit + complexity - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

HyperGrid HyperGrid::standard() {
  return {log_space(0.01, 1.0, 7), log_space(1e-6, 1e-2, 7), log_space(1e-10, 1e-4, 5)};
}

GprHyper optimize_hyper(std::span<const double> x, std::span<const double> f, const HyperGrid& grid) {
  if (x.size() != f.size()) throw InvalidArgument("optimize_hyper: inputs and targets differ in length");
  if (x.size() < 3) throw InsufficientDataError("optimize_hyper: need at least 3 points");

  GprHyper best{};
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double l : grid.lengthscales) {
    for (double sf : grid.signal_vars) {
      for (double sn : grid.noise_vars) {
        const GprHyper h{l, sf, sn};
        try {
          const double lml = log_marginal_likelihood(gpr_fit(x, f, h));
          if (lml > best_lml) {
            best_lml = lml;
            best = h;
            found = true;
          }
        } catch (const NotPositiveDefiniteError&) {
        }
      }
    }
  }
  if (!found) throw NotPositiveDefiniteError("optimize_hyper: no grid point could be factorized");
  return best;
}

const ArmDesiredTrajectory& DesiredTrajectory::arm(Arm a) const {
  for (const auto& arm_traj : arms)
    if (arm_traj.arm == a) return arm_traj;
  throw MissingModelError("desired trajectory has no " + std::string(arm_name(a)) + " arm");
}

ArmDesiredTrajectory fit_arm_trajectory(const RegisteredDemoSet& set, const DesiredFitOptions& opts) {
  if (set.demos.empty()) throw InvalidArgument("fit_desired_trajectory: empty registered set");
  if (opts.grid_n < 2) throw InvalidArgument("fit_desired_trajectory: grid_n must be >= 2");
  const std::size_t L = set.sample_count();
  for (const auto& d : set.demos)
    if (d.size() != L) throw InvalidArgument("fit_desired_trajectory: demos differ in sample count");
  if (L < 2) throw InvalidArgument("fit_desired_trajectory: demos need at least 2 samples");

  std::vector<std::size_t> picks;
  if (opts.points_per_demo == 0 || opts.points_per_demo >= L) {
    for (std::size_t k = 0; k < L; ++k) picks.push_back(k);
  } else {
    const std::size_t P = std::max<std::size_t>(opts.points_per_demo, 2);
    for (std::size_t j = 0; j < P; ++j) {
      const auto k = static_cast<std::size_t>(
          std::llround(static_cast<double>(j) * static_cast<double>(L - 1) / static_cast<double>(P - 1)));
      if (picks.empty() || picks.back() != k) picks.push_back(k);
    }
  }

  std::vector<double> x;
  std::array<std::vector<double>, 3> f;
  for (const auto& demo : set.demos) {
    for (std::size_t k : picks) {
      x.push_back(static_cast<double>(k) / static_cast<double>(L - 1));
      for (int d = 0; d < 3; ++d) f[static_cast<std::size_t>(d)].push_back(demo.samples[k].p(d));
    }
  }

  ArmDesiredTrajectory out;
  out.arm = set.arm;
  out.duration = set.demos[set.reference_index].duration();
  const std::size_t G = opts.grid_n;
  std::vector<double> grid(G);
  for (std::size_t g = 0; g < G; ++g) grid[g] = static_cast<double>(g) / static_cast<double>(G - 1);
  out.mean.resize(static_cast<Eigen::Index>(G), 3);
  out.variance.resize(static_cast<Eigen::Index>(G), 3);

  const std::size_t stride =
      opts.max_hyper_points == 0 ? 1 : std::max<std::size_t>(1, (x.size() + opts.max_hyper_points - 1) / opts.max_hyper_points);

  for (int d = 0; d < 3; ++d) {
    auto& fd = f[static_cast<std::size_t>(d)];
    double mean = 0.0;
    for (double v : fd) mean += v;
    mean /= static_cast<double>(fd.size());
    for (double& v : fd) v -= mean;
    out.offset(d) = mean;

    GprHyper hyper;
    if (opts.hyper) {
      hyper = *opts.hyper;
    } else {
      std::vector<double> xs, fs;
      for (std::size_t i = 0; i < x.size(); i += stride) {
        xs.push_back(x[i]);
        fs.push_back(fd[i]);
      }
      hyper = optimize_hyper(xs, fs);
    }
    out.hyper[static_cast<std::size_t>(d)] = hyper;

    const GprModel model = gpr_fit(x, fd, hyper, opts.jitter);
    const GprPrediction pred = gpr_predict(model, grid);
    for (std::size_t g = 0; g < G; ++g) {
      out.mean(static_cast<Eigen::Index>(g), d) = pred.mean[g] + mean;
      out.variance(static_cast<Eigen::Index>(g), d) = pred.variance[g];
    }
  }
  return out;
}

DesiredTrajectory fit_desired_trajectory(std::span<const RegisteredDemoSet> sets, const DesiredFitOptions& opts) {
  if (sets.empty()) throw InvalidArgument("fit_desired_trajectory: no registered sets");
  DesiredTrajectory out;
  const std::size_t G = opts.grid_n;
  out.grid.resize(G);
  for (std::size_t g = 0; g < G; ++g) out.grid[g] = static_cast<double>(g) / static_cast<double>(G - 1);
  for (const auto& set : sets) out.arms.push_back(fit_arm_trajectory(set, opts));
  return out;
}

}  // namespace lfd
