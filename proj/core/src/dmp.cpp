#include "lfd/dmp.hpp"

#include "lfd/errors.hpp"

#include <cmath>

namespace lfd {

void DmpParams::validate() const {
  if (!(alpha_z > 0.0) || !(beta_z > 0.0) || !(alpha_x > 0.0) || !(gamma > 0.0))
    throw InvalidArgument("DmpParams: alpha_z, beta_z, alpha_x and gamma must be > 0");
  if (centers.empty()) throw InvalidArgument("DmpParams: need at least one kernel");
  if (centers.size() != widths.size()) throw InvalidArgument("DmpParams: centers/widths size mismatch");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!(widths[i] > 0.0)) throw InvalidArgument("DmpParams: widths must be > 0");
    if (i > 0 && !(centers[i] < centers[i - 1]))
      throw InvalidArgument("DmpParams: centers must be strictly descending");
  }
}

DmpParams make_dmp_params(std::size_t n_kernels, double gamma, double alpha_z, double beta_z, double alpha_x) {
  if (n_kernels == 0) throw InvalidArgument("make_dmp_params: need at least one kernel");
  DmpParams p;
  p.alpha_z = alpha_z;
  p.beta_z = beta_z;
  p.alpha_x = alpha_x;
  p.gamma = gamma;
  p.centers.resize(n_kernels);
  p.widths.resize(n_kernels);
  if (n_kernels == 1) {
    p.centers[0] = 1.0;
    p.widths[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < n_kernels; ++i)
      p.centers[i] = std::exp(-alpha_x * static_cast<double>(i) / static_cast<double>(n_kernels - 1));
    for (std::size_t i = 0; i + 1 < n_kernels; ++i) {
      const double d = p.centers[i + 1] - p.centers[i];
      p.widths[i] = 1.0 / (2.0 * d * d);
    }
    p.widths[n_kernels - 1] = p.widths[n_kernels - 2];
  }
  p.validate();
  return p;
}

double phase_at(double t, const DmpParams& params) { return std::exp(-params.alpha_x * t / params.gamma); }

Eigen::VectorXd basis(double s, const DmpParams& params) {
  const auto n = static_cast<Eigen::Index>(params.kernel_count());
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = s - params.centers[static_cast<std::size_t>(i)];
    psi(i) = std::exp(-params.widths[static_cast<std::size_t>(i)] * d * d);
  }
  return psi;
}

Vec3 forcing(const DmpModel& model, double s) {
  const Eigen::VectorXd psi = basis(s, model.params);
  const double denom = psi.sum();
  if (!(denom > 0.0)) return Vec3::Zero();
  return (s / denom) * (model.weights.transpose() * psi);
}

namespace {

// Second-order accurate derivative estimates on a possibly non-uniform grid.
void finite_differences(const std::vector<double>& t, const std::vector<double>& x, std::vector<double>& v,
                        std::vector<double>& a) {
  const std::size_t n = t.size();
  v.assign(n, 0.0);
  a.assign(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h1 = t[k] - t[k - 1];
    const double h2 = t[k + 1] - t[k];
    v[k] = (x[k + 1] - x[k - 1]) / (h1 + h2);
    a[k] = 2.0 * ((x[k + 1] - x[k]) / h2 - (x[k] - x[k - 1]) / h1) / (h1 + h2);
  }
  v[0] = (x[1] - x[0]) / (t[1] - t[0]);
  v[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
  a[0] = a[1];
  a[n - 1] = a[n - 2];
}

}  // namespace

DmpModel fit_weights(const Trajectory& demo, const DmpParams& params, DegeneratePolicy policy) {
  if (demo.size() < 3) throw InvalidArgument("fit_weights: demo needs at least 3 samples");
  demo.validate();

  DmpModel model;
  model.params = params;
  model.params.gamma = demo.duration();
  model.params.validate();
  model.arm = demo.arm;
  model.x0 = demo.samples.front().p;
  model.g = demo.samples.back().p;

  const DmpParams& P = model.params;
  const std::size_t n = demo.size();
  const auto N = static_cast<Eigen::Index>(P.kernel_count());
  model.weights = Eigen::MatrixX3d::Zero(N, 3);

  int degenerate_count = 0;
  for (int d = 0; d < 3; ++d) {
    if (std::abs(model.g(d) - model.x0(d)) < kDegenerateAmplitude) {
      if (policy == DegeneratePolicy::Strict)
        throw DegenerateAmplitudeError("fit_weights: |g - x0| below threshold in dimension " + std::to_string(d));
      model.degenerate[static_cast<std::size_t>(d)] = true;
      ++degenerate_count;
    }
  }
  if (degenerate_count == 3) throw DegenerateAmplitudeError("fit_weights: demo start and goal coincide");

  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = demo.samples[k].t - demo.samples.front().t;
  std::vector<double> s(n);
  std::vector<Eigen::VectorXd> psi(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = phase_at(t[k], P);
    psi[k] = basis(s[k], P);
  }

  const double gamma = P.gamma;
  for (int d = 0; d < 3; ++d) {
    if (model.degenerate[static_cast<std::size_t>(d)]) continue;
    std::vector<double> x(n), v, a;
    for (std::size_t k = 0; k < n; ++k) x[k] = demo.samples[k].p(d);
    finite_differences(t, x, v, a);
    const double amp = model.g(d) - model.x0(d);

    Eigen::VectorXd num = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd den = Eigen::VectorXd::Zero(N);
    for (std::size_t k = 0; k < n; ++k) {
      const double target =
          (gamma * a[k] - P.alpha_z * (P.beta_z * (model.g(d) - x[k]) - gamma * v[k])) / amp;
      num += psi[k] * (s[k] * target);
      den += psi[k] * (s[k] * s[k]);
    }
    for (Eigen::Index i = 0; i < N; ++i) model.weights(i, d) = den(i) > 0.0 ? num(i) / den(i) : 0.0;
  }
  return model;
}

namespace {

struct Deriv {
  Vec3 dx;
  Vec3 dv;
  double ds;
};

}  // namespace

std::vector<DmpState> rollout_states(const DmpModel& model, const Vec3& start, const Vec3& goal, double duration,
                                     double dt, double horizon) {
  if (!(dt > 0.0)) throw InvalidArgument("rollout: dt must be > 0");
  if (!(duration >= dt)) throw InvalidArgument("rollout: duration must be >= dt");
  if (horizon < 0.0) horizon = duration;
  if (horizon < dt) throw InvalidArgument("rollout: horizon must be >= dt");

  DmpParams P = model.params;
  P.gamma = duration;
  const double gamma = duration;
  Vec3 scale = goal - start;
  for (int d = 0; d < 3; ++d)
    if (model.degenerate[static_cast<std::size_t>(d)]) scale(d) = 0.0;

  DmpModel scaled = model;
  scaled.params = P;

  auto deriv = [&](const Vec3& x, const Vec3& v, double s) {
    Deriv out;
    out.dx = v;
    const Vec3 f = forcing(scaled, s);
    out.dv = (P.alpha_z * (P.beta_z * (goal - x) - gamma * v) + scale.cwiseProduct(f)) / gamma;
    out.ds = -P.alpha_x * s / gamma;
    return out;
  };

  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  std::vector<DmpState> states;
  states.reserve(steps + 1);
  DmpState st;
  st.x = start;
  states.push_back(st);
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = (k + 1 == steps) ? horizon - static_cast<double>(k) * dt : dt;
    const Deriv k1 = deriv(st.x, st.v, st.s);
    const Deriv k2 = deriv(st.x + 0.5 * h * k1.dx, st.v + 0.5 * h * k1.dv, st.s + 0.5 * h * k1.ds);
    const Deriv k3 = deriv(st.x + 0.5 * h * k2.dx, st.v + 0.5 * h * k2.dv, st.s + 0.5 * h * k2.ds);
    const Deriv k4 = deriv(st.x + h * k3.dx, st.v + h * k3.dv, st.s + h * k3.ds);
    st.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    st.v += h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    st.s += h / 6.0 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds);
    st.t = (k + 1 == steps) ? horizon : static_cast<double>(k + 1) * dt;
    states.push_back(st);
  }
  return states;
}

Trajectory rollout(const DmpModel& model, const Vec3& start, const Vec3& goal, double duration, double dt,
                   double horizon) {
  const auto states = rollout_states(model, start, goal, duration, dt, horizon);
  Trajectory out;
  out.arm = model.arm;
  out.samples.reserve(states.size());
  for (const auto& st : states) {
    TrajectorySample s;
    s.t = st.t;
    s.p = st.x;
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace lfd
