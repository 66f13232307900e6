#include "lfd/sim.hpp"

#include "lfd/errors.hpp"
#include "lfd/rng.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lfd {

namespace {

constexpr std::array<std::string_view, kPhaseCount> kPhaseNames = {
    "R-approach-1", "R-grasp", "R-to-handoff", "handoff", "L-to-2", "L-place-2", "L-grasp-2",
    "L-to-3",       "L-place-3", "R-grasp-3", "R-to-1",   "R-place-1", "done"};

TaskPhase next_phase(TaskPhase p) {
  return p == TaskPhase::Done ? p : static_cast<TaskPhase>(static_cast<int>(p) + 1);
}

}  // namespace

std::string_view phase_name(TaskPhase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }

TaskPhase parse_phase(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i)
    if (kPhaseNames[i] == name) return static_cast<TaskPhase>(i);
  throw InvalidArgument("unknown task phase '" + std::string(name) + "'");
}

Arm active_arm(TaskPhase p) {
  switch (p) {
    case TaskPhase::Handoff:
    case TaskPhase::LTo2:
    case TaskPhase::LPlace2:
    case TaskPhase::LGrasp2:
    case TaskPhase::LTo3:
    case TaskPhase::LPlace3:
      return Arm::Left;
    default:
      return Arm::Right;
  }
}

bool is_transit(TaskPhase p) {
  return p == TaskPhase::RApproach1 || p == TaskPhase::RToHandoff || p == TaskPhase::LTo2 || p == TaskPhase::LTo3 ||
         p == TaskPhase::RTo1;
}

bool is_local(TaskPhase p) {
  return p == TaskPhase::RGrasp || p == TaskPhase::LPlace2 || p == TaskPhase::LGrasp2 || p == TaskPhase::LPlace3 ||
         p == TaskPhase::RGrasp3 || p == TaskPhase::RPlace1;
}

int phase_site(TaskPhase p) {
  switch (p) {
    case TaskPhase::RApproach1:
    case TaskPhase::RGrasp:
    case TaskPhase::RTo1:
    case TaskPhase::RPlace1:
      return 1;
    case TaskPhase::LTo2:
    case TaskPhase::LPlace2:
    case TaskPhase::LGrasp2:
      return 2;
    case TaskPhase::LTo3:
    case TaskPhase::LPlace3:
    case TaskPhase::RGrasp3:
      return 3;
    default:
      return 0;
  }
}

void SimConfig::validate() const {
  if (!(grasp_radius > 0.0) || !(place_radius > 0.0)) throw InvalidArgument("SimConfig: radii must be > 0");
  if (!(dt > 0.0)) throw InvalidArgument("SimConfig: dt must be > 0");
  if (!(tool_v_max > 0.0)) throw InvalidArgument("SimConfig: tool_v_max must be > 0");
  if (!(timeout > 0.0)) throw InvalidArgument("SimConfig: timeout must be > 0");
  if (image_size <= 0) throw InvalidArgument("SimConfig: image_size must be > 0");
  if (!(view_half_extent > 0.0)) throw InvalidArgument("SimConfig: view_half_extent must be > 0");
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      if ((sites[i] - sites[j]).norm() < 1e-9) throw InvalidArgument("SimConfig: board sites must be distinct");
}

Quat home_orientation(Arm a) {
  const double angle = a == Arm::Right ? -std::numbers::pi / 4.0 : -3.0 * std::numbers::pi / 4.0;
  return Quat(Eigen::AngleAxisd(angle, Vec3::UnitZ()));
}

SimState sim_init(const SimConfig& cfg, std::uint64_t /*seed*/) {
  cfg.validate();
  SimState s;
  s.left.p = cfg.home_left;
  s.left.q = home_orientation(Arm::Left);
  s.right.p = cfg.home_right;
  s.right.q = home_orientation(Arm::Right);
  s.peg.p = cfg.site(1);
  s.peg.site = 1;
  s.phase = TaskPhase::RApproach1;
  return s;
}

Vec3 phase_target(const SimState& s, const SimConfig& cfg) {
  switch (s.phase) {
    case TaskPhase::RGrasp:
    case TaskPhase::LGrasp2:
    case TaskPhase::RGrasp3:
    case TaskPhase::Handoff:
      return s.peg.p;
    case TaskPhase::RToHandoff:
    case TaskPhase::Done:
      return cfg.handoff;
    default:
      return cfg.site(phase_site(s.phase));
  }
}

namespace {

bool phase_complete(const SimState& s, const SimConfig& cfg) {
  const auto& r = s.right.p;
  const auto& l = s.left.p;
  const double near = 3.0 * cfg.grasp_radius;
  switch (s.phase) {
    case TaskPhase::RApproach1:
      return (r - cfg.site(1)).norm() <= near;
    case TaskPhase::RGrasp:
    case TaskPhase::RGrasp3:
      return s.peg.held_by == Arm::Right;
    case TaskPhase::RToHandoff:
      return s.peg.held_by == Arm::Right && (r - cfg.handoff).norm() <= cfg.grasp_radius;
    case TaskPhase::Handoff:
    case TaskPhase::LGrasp2:
      return s.peg.held_by == Arm::Left;
    case TaskPhase::LTo2:
      return (l - cfg.site(2)).norm() <= near;
    case TaskPhase::LPlace2:
      return s.peg.site == 2;
    case TaskPhase::LTo3:
      return (l - cfg.site(3)).norm() <= near;
    case TaskPhase::LPlace3:
      return s.peg.site == 3;
    case TaskPhase::RTo1:
      return (r - cfg.site(1)).norm() <= near;
    case TaskPhase::RPlace1:
      return s.peg.site == 1;
    case TaskPhase::Done:
      return false;
  }
  return false;
}

}  // namespace

StepOutcome sim_step(const SimState& state, const Command& left, const Command& right, const SimConfig& cfg) {
  StepOutcome out{state, {}};
  SimState& s = out.state;
  const double cap = cfg.tool_v_max * cfg.dt;
  const double t_next = static_cast<double>(state.step + 1) * cfg.dt;

  const std::array<std::pair<Arm, const Command*>, 2> cmds{{{Arm::Left, &left}, {Arm::Right, &right}}};
  std::array<bool, 2> was_closed{s.left.grip, s.right.grip};
  for (const auto& [arm, cmd] : cmds) {
    ToolState& tool = s.tool(arm);
    tool.p += cap_norm(cmd->dP, cap);
    tool.q = cmd->q;
    tool.grip = cmd->grip;
  }
  if (s.peg.held_by) s.peg.p = s.tool(*s.peg.held_by).p;

  // Closing edges first so a simultaneous release/close hands the peg over.
  for (const auto& [arm, cmd] : cmds) {
    if (!cmd->grip || was_closed[static_cast<std::size_t>(arm_index(arm))]) continue;
    const ToolState& tool = s.tool(arm);
    if (s.peg.held_by == arm) continue;
    if ((tool.p - s.peg.p).norm() > cfg.grasp_radius) continue;
    const std::string name(arm_name(arm));
    if (s.peg.held_by) {
      out.events.push_back({t_next, "transfer", name + " takes the peg from " + std::string(arm_name(*s.peg.held_by))});
    } else {
      out.events.push_back({t_next, "grasp", name + " grasps the peg"});
    }
    s.peg.held_by = arm;
    s.peg.site = 0;
    s.peg.p = tool.p;
  }
  for (const auto& [arm, cmd] : cmds) {
    if (cmd->grip || !was_closed[static_cast<std::size_t>(arm_index(arm))]) continue;
    if (s.peg.held_by != arm) continue;
    s.peg.held_by.reset();
    const int site = phase_site(s.phase);
    if (site != 0 && (s.peg.p - cfg.site(site)).norm() <= cfg.place_radius) {
      s.peg.p = cfg.site(site);
      s.peg.site = site;
      out.events.push_back({t_next, "seat", "peg seated at site " + std::to_string(site)});
    } else {
      s.peg.p.z() = cfg.board_plane_height;
      s.peg.site = 0;
      out.events.push_back({t_next, "drop", "peg dropped by " + std::string(arm_name(arm))});
    }
  }

  if (phase_complete(s, cfg)) {
    const TaskPhase from = s.phase;
    s.phase = next_phase(s.phase);
    out.events.push_back({t_next, "phase", std::string(phase_name(from)) + " -> " + std::string(phase_name(s.phase))});
  }
  s.step = state.step + 1;
  s.clock = t_next;
  return out;
}

int task_context(const SimState& s, const SimConfig& cfg) {
  if ((s.phase == TaskPhase::RToHandoff || s.phase == TaskPhase::Handoff) &&
      (s.left.p - s.right.p).norm() <= 2.0 * cfg.grasp_radius)
    return 1;
  if (is_local(s.phase) && (s.tool(active_arm(s.phase)).p - phase_target(s, cfg)).norm() <= 3.0 * cfg.grasp_radius)
    return 2;
  return 0;
}

RenderStyle RenderStyle::source() { return {}; }

RenderStyle RenderStyle::target() {
  RenderStyle s;
  s.background = 0.08f;
  s.site = 0.38f;
  s.marker_right = 0.62f;
  s.marker_left = 0.45f;
  s.peg = 0.92f;
  s.shaft_right = 0.7f;
  s.shaft_left = 0.58f;
  s.jaw_right = 0.85f;
  s.jaw_left = 0.7f;
  s.gain = 0.9f;
  s.noise = 0.02f;
  s.offset_px = Vec2(1.2, -0.8);
  s.noise_seed = 0x5eed;
  return s;
}

Vec2 world_to_pixel(const Vec3& p, const SimConfig& cfg, const RenderStyle& style) {
  const double scale = cfg.image_size / (2.0 * cfg.view_half_extent);
  return {(p.x() + cfg.view_half_extent) * scale + style.offset_px.x(),
          (cfg.view_half_extent - p.y()) * scale + style.offset_px.y()};
}

namespace {

struct Shape {
  enum Kind { Disc, Ring, Capsule } kind;
  Vec2 a, b;        // centre, or capsule end points
  double r0, r1;    // radius (disc/capsule), inner/outer radius (ring)
  float value;
  double x0, y0, x1, y1;  // bounding box

  static Shape disc(Vec2 c, double r, float v) { return {Disc, c, c, r, r, v, c.x() - r, c.y() - r, c.x() + r, c.y() + r}; }
  static Shape ring(Vec2 c, double ri, double ro, float v) {
    return {Ring, c, c, ri, ro, v, c.x() - ro, c.y() - ro, c.x() + ro, c.y() + ro};
  }
  static Shape capsule(Vec2 a, Vec2 b, double r, float v) {
    return {Capsule, a, b, r, r, v, std::min(a.x(), b.x()) - r, std::min(a.y(), b.y()) - r,
            std::max(a.x(), b.x()) + r, std::max(a.y(), b.y()) + r};
  }

  [[nodiscard]] bool contains(double x, double y) const {
    const Vec2 p(x, y);
    switch (kind) {
      case Disc:
        return (p - a).squaredNorm() <= r0 * r0;
      case Ring: {
        const double d2 = (p - a).squaredNorm();
        return d2 >= r0 * r0 && d2 <= r1 * r1;
      }
      case Capsule: {
        const Vec2 ab = b - a;
        const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        return (p - (a + t * ab)).squaredNorm() <= r0 * r0;
      }
    }
    return false;
  }
};

}  // namespace

Image render_observation(const SimState& s, const SimConfig& cfg, const RenderStyle& style) {
  const int n = cfg.image_size;
  const double px_per_m = n / (2.0 * cfg.view_half_extent);
  auto P = [&](const Vec3& w) { return world_to_pixel(w, cfg, style); };

  std::vector<Shape> shapes;
  for (const auto& site : cfg.sites) shapes.push_back(Shape::disc(P(site), 0.004 * px_per_m, style.site));
  if (s.phase != TaskPhase::Done) {
    const Arm a = active_arm(s.phase);
    const float mv = a == Arm::Right ? style.marker_right : style.marker_left;
    const Vec3 target = s.phase == TaskPhase::Handoff || s.phase == TaskPhase::RToHandoff
                            ? cfg.handoff
                            : cfg.site(phase_site(s.phase));
    shapes.push_back(Shape::ring(P(target), 0.0045 * px_per_m, 0.006 * px_per_m, mv));
  }
  shapes.push_back(Shape::disc(P(s.peg.p), 0.0025 * px_per_m, style.peg));
  for (Arm arm : {Arm::Left, Arm::Right}) {
    const ToolState& tool = s.tool(arm);
    const Vec3 dir3 = tool.q * Vec3::UnitX();
    Vec2 dir(dir3.x(), -dir3.y());  // image y points down
    if (dir.norm() < 1e-9) dir = Vec2(1.0, 0.0);
    dir.normalize();
    const Vec2 tip = P(tool.p);
    const float shaft = arm == Arm::Right ? style.shaft_right : style.shaft_left;
    const float jaw = arm == Arm::Right ? style.jaw_right : style.jaw_left;
    shapes.push_back(Shape::capsule(tip + dir * (0.003 * px_per_m), tip + dir * (0.030 * px_per_m),
                                    0.0012 * px_per_m, shaft));
    if (tool.grip) {
      shapes.push_back(Shape::disc(tip, 0.0012 * px_per_m, jaw));
    } else {
      const Vec2 perp(-dir.y(), dir.x());
      shapes.push_back(Shape::disc(tip + perp * (0.0018 * px_per_m), 0.0009 * px_per_m, jaw));
      shapes.push_back(Shape::disc(tip - perp * (0.0018 * px_per_m), 0.0009 * px_per_m, jaw));
    }
  }

  constexpr int ss = 3;
  Image img(n, n);
  std::vector<const Shape*> hits;
  Rng rng(derive_seed(style.noise_seed, s.step));
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      hits.clear();
      for (const auto& sh : shapes)
        if (sh.x1 >= x && sh.x0 <= x + 1 && sh.y1 >= y && sh.y0 <= y + 1) hits.push_back(&sh);
      double acc = 0.0;
      if (hits.empty()) {
        acc = style.background;
      } else {
        for (int sy = 0; sy < ss; ++sy) {
          for (int sx = 0; sx < ss; ++sx) {
            const double u = x + (sx + 0.5) / ss;
            const double v = y + (sy + 0.5) / ss;
            double val = style.background;
            for (const Shape* sh : hits)
              if (sh->contains(u, v)) val = sh->value;
            acc += val;
          }
        }
        acc /= ss * ss;
      }
      double out = style.gain * acc;
      if (style.noise > 0.0f) out += style.noise * rng.normal();
      out = std::clamp(out, 0.0, 1.0);
      img.at(x, y) = static_cast<float>(std::round(out * 255.0) / 255.0);
    }
  }
  return img;
}

PlanarTransform default_camera(const SimConfig& cfg) {
  // Board mm -> pixels with a mild perspective tilt; calibrated from a grid.
  Mat3 M;
  M << 4.0, 0.08, 320.0, 0.05, -4.0, 240.0, 2e-5, 4e-5, 1.0;
  std::vector<Vec2> px, mm;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -2; j <= 2; ++j) {
      const Vec2 b(15.0 * i, 15.0 * j);
      const Vec3 h = M * Vec3(b.x(), b.y(), 1.0);
      mm.push_back(b);
      px.push_back(h.head<2>() / h.z());
    }
  }
  return estimate_board_homography(px, mm, cfg.board_plane_height);
}

KeypointSet scene_keypoints(const SimConfig& cfg, const PlanarTransform& camera, const KeypointConfig& kp,
                            std::uint64_t seed) {
  std::vector<Vec2> pixels;
  for (const auto& site : cfg.sites) pixels.push_back(world_to_image(camera, site));
  return generate_keypoints(pixels, kp, seed);
}

SimConfig jitter_board(const SimConfig& cfg, double max_shift, double max_angle, std::uint64_t seed) {
  Rng rng(seed);
  const double angle = rng.uniform(-max_angle, max_angle);
  const Vec3 shift(rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift), 0.0);
  const Mat3 R = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
  SimConfig out = cfg;
  for (auto& site : out.sites) site = R * site + shift;
  out.handoff = R * cfg.handoff + shift;
  return out;
}

}  // namespace lfd
