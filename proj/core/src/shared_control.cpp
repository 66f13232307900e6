#include "lfd/shared_control.hpp"

#include "lfd/errors.hpp"

#include <cmath>

namespace lfd {

void BlendConfig::validate() const {
  if (!(tau > 0.0)) throw InvalidArgument("BlendConfig: tau must be > 0");
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("BlendConfig: lambda must be in (0, 1)");
  if (!(v_max >= 0.0)) throw InvalidArgument("BlendConfig: v_max must be >= 0");
}

AlphaUpdate compute_alpha(const ContextProbs& probs, const RoleState& state, double lambda) {
  AlphaUpdate out;
  const int c = argmax(probs);
  const double p_prev = probs[static_cast<std::size_t>(state.prev_context)];
  out.context = c;
  out.delta_pc = probs[static_cast<std::size_t>(c)] - p_prev;
  if (out.delta_pc < lambda)
    out.alpha = c == 0 ? 1.0 - p_prev : p_prev;
  else
    out.alpha = c == 0 ? 0.0 : 1.0;
  out.state.prev_context = c;
  out.state.alpha = out.alpha;
  return out;
}

Vec3 blend(const Vec3& dPh, const Vec3& dPr, double alpha, double tau) {
  return tau * (alpha * dPh + (1.0 - alpha) * dPr);
}

std::string_view mode_name(ControlMode m) {
  switch (m) {
    case ControlMode::Manual:
      return "manual";
    case ControlMode::Autonomous:
      return "autonomous";
    case ControlMode::AdaptiveShared:
      return "shared";
  }
  return "manual";
}

ControlMode mode_of(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("mode_of: alpha outside [0, 1]");
  if (alpha == 1.0) return ControlMode::Manual;
  if (alpha == 0.0) return ControlMode::Autonomous;
  return ControlMode::AdaptiveShared;
}

Vec3 cap_norm(const Vec3& v, double cap) {
  const double n = v.norm();
  if (n <= cap) return v;
  if (!(cap > 0.0)) return Vec3::Zero();
  return v * (cap / n);
}

RobotIncrement robot_increment(std::span<const Vec3> ref, const Vec3& pose, std::size_t progress,
                               const BlendConfig& cfg, double dt) {
  if (ref.empty()) throw InvalidArgument("robot_increment: empty reference");
  const std::size_t last = ref.size() - 1;
  std::size_t k = std::min(progress, last);
  double best = (ref[k] - pose).squaredNorm();
  for (std::size_t i = k + 1; i <= last; ++i) {
    const double d = (ref[i] - pose).squaredNorm();
    if (d < best) {
      best = d;
      k = i;
    }
  }
  RobotIncrement out;
  out.progress = std::max(progress, k);
  const std::size_t target = std::min(out.progress + 1, last);
  out.dPr = cap_norm(ref[target] - pose, cfg.v_max * dt);
  return out;
}

Command compose_command(const Command& human, const Vec3& dPr, double alpha, const BlendConfig& cfg, double dt) {
  Command out = human;
  out.dP = cap_norm(blend(human.dP, dPr, alpha, cfg.tau), cfg.v_max * dt);
  return out;
}

std::vector<Vec3> resample_path(std::span<const Vec3> points, double spacing) {
  if (points.empty()) throw InvalidArgument("resample_path: empty path");
  if (!(spacing > 0.0)) throw InvalidArgument("resample_path: spacing must be > 0");
  std::vector<Vec3> out{points.front()};
  double carry = 0.0;  // arc length since the last emitted point
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Vec3 a = points[i - 1];
    const Vec3 seg = points[i] - a;
    const double len = seg.norm();
    if (len == 0.0) continue;
    double s = spacing - carry;
    while (s <= len) {
      out.push_back(a + seg * (s / len));
      s += spacing;
    }
    carry = len - (s - spacing);
  }
  if ((out.back() - points.back()).norm() > 1e-12) out.push_back(points.back());
  return out;
}

}  // namespace lfd
