#include "lfd/types.hpp"

#include "lfd/errors.hpp"

#include <cmath>

namespace lfd {

std::string_view arm_name(Arm arm) { return arm == Arm::Left ? "left" : "right"; }

Arm parse_arm(std::string_view name) {
  if (name == "left") return Arm::Left;
  if (name == "right") return Arm::Right;
  throw FormatError("unknown arm '" + std::string(name) + "'");
}

double Trajectory::duration() const {
  if (samples.size() < 2) return 0.0;
  return samples.back().t - samples.front().t;
}

std::vector<Vec3> Trajectory::positions() const {
  std::vector<Vec3> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.p);
  return out;
}

void Trajectory::validate() const {
  if (samples.size() < 2) throw InvalidArgument("trajectory needs at least 2 samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!s.p.allFinite() || !std::isfinite(s.t))
      throw InvalidArgument("trajectory sample " + std::to_string(i) + " is not finite");
    if (std::abs(s.q.norm() - 1.0) > 1e-9)
      throw InvalidArgument("trajectory sample " + std::to_string(i) + " has a non-unit quaternion");
    if (i > 0 && !(s.t > samples[i - 1].t))
      throw InvalidArgument("trajectory timestamps must be strictly increasing");
  }
}

}  // namespace lfd
