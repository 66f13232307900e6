#include "lfd/episode.hpp"

#include "lfd/errors.hpp"
#include "lfd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfd {

namespace {

bool is_grasp(TaskPhase p) {
  return p == TaskPhase::RGrasp || p == TaskPhase::LGrasp2 || p == TaskPhase::RGrasp3 || p == TaskPhase::Handoff;
}

std::array<Vec3, 3> perceive_sites(const SimConfig& sim, const KeypointConfig& kp, const GmmConfig& gmm,
                                   std::uint64_t seed) {
  const PlanarTransform camera = default_camera(sim);
  const KeypointSet keypoints = scene_keypoints(sim, camera, kp, derive_seed(seed, 2));
  GmmConfig g = gmm;
  g.seed = derive_seed(seed, 3);
  // one extra component soaks up the clutter
  const GmmModel model = gmm_fit(keypoints, sim.sites.size() + 1, g);
  const std::vector<Vec2> centers = cluster_centers(model);
  std::vector<Vec3> world;
  for (std::size_t k = 0; k < sim.sites.size() && k < centers.size(); ++k)
    world.push_back(image_to_world(camera, centers[k]));
  std::array<Vec3, 3> out;
  for (int i = 1; i <= 3; ++i) out[static_cast<std::size_t>(i - 1)] = select_goal(world, sim.site(i));
  return out;
}

}  // namespace

std::string_view run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Manual:
      return "manual";
    case RunMode::Autonomous:
      return "auto";
    case RunMode::Shared:
      return "shared";
  }
  return "manual";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "manual") return RunMode::Manual;
  if (s == "auto" || s == "autonomous") return RunMode::Autonomous;
  if (s == "shared") return RunMode::Shared;
  throw InvalidArgument("unknown mode '" + std::string(s) + "'");
}

EpisodeRunner::EpisodeRunner(RunMode mode, const EpisodeModels& models, const EpisodeConfig& cfg,
                             std::uint64_t seed)
    : mode_(mode), models_(models), cfg_(cfg) {
  cfg_.sim.validate();
  cfg_.blend.validate();
  if (cfg_.frame_period == 0) throw InvalidArgument("frame_period must be positive");
  if (!(cfg_.dmp_dt > 0.0)) throw InvalidArgument("dmp_dt must be positive");
  if (mode_ == RunMode::Shared && !models_.classifier) throw MissingModelError("shared mode needs a context classifier");
  if (mode_ != RunMode::Manual && models_.dmps.empty()) throw MissingModelError("robot modes need phase DMPs");
  if (models_.classifier && models_.classifier->arch.input_size != cfg_.sim.image_size)
    throw SizeMismatchError("classifier input size " + std::to_string(models_.classifier->arch.input_size) +
                            " does not match image size " + std::to_string(cfg_.sim.image_size));

  state_ = sim_init(cfg_.sim, seed);
  log_.mode = mode_;
  log_.seed = seed;
  log_.dt = cfg_.sim.dt;
  log_.perceived_sites = perceive_sites(cfg_.sim, cfg_.keypoints, cfg_.gmm, seed);
  enter_phase();
  StepRecord first = snapshot();
  first.oracle = task_context(state_, cfg_.sim);
  first.mode = mode_of(alpha_);
  log_.steps.push_back(first);
}

bool EpisodeRunner::finished() const {
  return state_.phase == TaskPhase::Done || state_.clock >= cfg_.sim.timeout - 1e-9;
}

Vec3 EpisodeRunner::robot_goal() const {
  const TaskPhase p = state_.phase;
  const int site = phase_site(p);
  if (is_grasp(p) && (state_.peg.held_by || state_.peg.site != site)) return state_.peg.p;
  if (site > 0) return log_.perceived_sites[static_cast<std::size_t>(site - 1)];
  return phase_target(state_, cfg_.sim);
}

void EpisodeRunner::enter_phase() {
  progress_ = 0;
  reference_.clear();
  if (state_.phase == TaskPhase::Done) return;
  const Arm arm = active_arm(state_.phase);
  const Vec3 start = state_.tool(arm).p;
  const Vec3 goal = robot_goal();
  std::vector<Vec3> path;
  const auto it = models_.dmps.find(state_.phase);
  if (it != models_.dmps.end()) {
    const double gamma = it->second.params.gamma;
    const Trajectory roll = rollout(it->second, start, goal, gamma, cfg_.dmp_dt);
    path = roll.positions();
    path.push_back(goal);
  } else {
    path = {start, goal};
  }
  reference_ = resample_path(path, cfg_.blend.v_max * cfg_.sim.dt);
}

StepRecord EpisodeRunner::snapshot() const {
  StepRecord r;
  r.clock = state_.clock;
  r.phase = state_.phase;
  r.master = master_;
  r.alpha = alpha_;
  r.tool = {state_.left.p, state_.right.p};
  r.grip = {state_.left.grip, state_.right.grip};
  r.peg = state_.peg.p;
  r.peg_holder = state_.peg.held_by ? arm_index(*state_.peg.held_by) : -1;
  r.peg_site = state_.peg.site;
  return r;
}

const StepRecord& EpisodeRunner::step(const HumanInput& input) {
  if (finished()) throw InvalidArgument("episode already finished");
  const int oracle = task_context(state_, cfg_.sim);
  bool framed = false;
  int context = -1;

  switch (mode_) {
    case RunMode::Manual:
      alpha_ = 1.0;
      break;
    case RunMode::Autonomous:
      alpha_ = is_transit(state_.phase) ? 0.0 : 1.0;
      break;
    case RunMode::Shared:
      if (state_.step % cfg_.frame_period == 0) {
        const Image frame = render_observation(state_, cfg_.sim, cfg_.style);
        const ContextPrediction pred = predict_context(*models_.classifier, frame);
        const AlphaUpdate up = compute_alpha(pred.probs, role_, cfg_.blend.lambda);
        role_ = up.state;
        alpha_ = up.alpha;
        probs_ = pred.probs;
        framed = true;
        context = pred.c;
      }
      break;
  }

  const Arm arm = active_arm(state_.phase);
  std::array<Vec3, 2> dPr{Vec3::Zero(), Vec3::Zero()};
  if (!reference_.empty()) {
    const RobotIncrement inc = robot_increment(reference_, state_.tool(arm).p, progress_, cfg_.blend, cfg_.sim.dt);
    progress_ = inc.progress;
    dPr[static_cast<std::size_t>(arm_index(arm))] = inc.dPr;
  }

  std::array<Command, 2> cmd;
  std::array<Vec3, 2> dPh{Vec3::Zero(), Vec3::Zero()};
  for (std::size_t i = 0; i < 2; ++i) {
    const Arm a = i == 0 ? Arm::Left : Arm::Right;
    dPh[i] = input.engaged[i] ? input.dPh[i] : Vec3::Zero();
    Command human{dPh[i], state_.tool(a).q, input.grip[i]};
    cmd[i] = compose_command(human, dPr[i], alpha_, cfg_.blend, cfg_.sim.dt);
    if (input.engaged[i]) master_[i] += dPh[i];
    if (input.clutch_event[i]) master_[i] = Vec3::Zero();
  }

  const TaskPhase before = state_.phase;
  StepOutcome out = sim_step(state_, cmd[0], cmd[1], cfg_.sim);
  state_ = std::move(out.state);
  for (std::size_t i = 0; i < 2; ++i)
    if (input.clutch_event[i])
      log_.events.push_back({state_.clock, "clutch", std::string(arm_name(i == 0 ? Arm::Left : Arm::Right))});
  for (auto& e : out.events) log_.events.push_back(std::move(e));
  if (state_.phase != before) enter_phase();

  StepRecord r = snapshot();
  r.engaged = input.engaged;
  r.dPh = dPh;
  r.dPr = dPr;
  r.framed = framed;
  if (framed) r.probs = probs_;
  r.context = context;
  r.oracle = oracle;
  r.mode = mode_of(alpha_);
  log_.steps.push_back(r);
  log_.success = state_.phase == TaskPhase::Done;
  return log_.steps.back();
}

EpisodeLog run_episode(RunMode mode, const EpisodeModels& models, const EpisodeConfig& cfg,
                       const HumanAgentConfig& agent, std::uint64_t seed) {
  EpisodeRunner runner(mode, models, cfg, seed);
  HumanAgentConfig a = agent;
  a.seed = derive_seed(agent.seed, seed);
  ScriptedHuman human(a, cfg.sim, cfg.blend.tau, runner.state());
  while (!runner.finished()) runner.step(human.act(runner.state(), runner.alpha()));
  return runner.log();
}

Metrics compute_metrics(const EpisodeLog& log) {
  if (log.steps.size() < 2) throw InsufficientDataError("episode log has no steps");
  Metrics m;
  m.T = log.steps.back().clock;
  double path = 0.0;
  for (std::size_t k = 1; k < log.steps.size(); ++k) {
    const StepRecord& prev = log.steps[k - 1];
    const StepRecord& cur = log.steps[k];
    for (std::size_t i = 0; i < 2; ++i) {
      if (cur.engaged[i]) m.M += cur.dPh[i].norm();
      if (cur.engaged[i] && !prev.engaged[i]) ++m.C;
      path += (cur.tool[i] - prev.tool[i]).norm();
    }
  }
  m.A = m.T > 0.0 ? 1000.0 * path / m.T : 0.0;
  return m;
}

std::vector<DemoTrial> generate_demos(std::size_t n, const EpisodeConfig& cfg, const HumanAgentConfig& agent,
                                      std::uint64_t seed, const DemoGenConfig& gen) {
  if (n == 0) throw InvalidArgument("demo count must be positive");
  if (gen.sample_every == 0 || gen.frame_every == 0 || gen.frame_every_bimanual == 0)
    throw InvalidArgument("demo sampling periods must be positive");
  const EpisodeModels none;
  std::vector<DemoTrial> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t tseed = derive_seed(seed, i);
    EpisodeConfig ec = cfg;
    ec.sim = jitter_board(cfg.sim, gen.jitter_shift, gen.jitter_angle, derive_seed(tseed, 7));
    EpisodeRunner runner(RunMode::Manual, none, ec, tseed);
    HumanAgentConfig a = agent;
    a.seed = derive_seed(agent.seed, tseed);
    ScriptedHuman human(a, ec.sim, ec.blend.tau, runner.state());

    DemoTrial trial;
    trial.left.arm = Arm::Left;
    trial.right.arm = Arm::Right;
    RenderStyle style = gen.style;
    style.noise_seed = derive_seed(gen.style.noise_seed, tseed);
    auto record = [&](const SimState& s) {
      if (s.step % gen.sample_every == 0) {
        trial.left.samples.push_back({s.clock, s.left.p, s.left.q, s.left.grip});
        trial.right.samples.push_back({s.clock, s.right.p, s.right.q, s.right.grip});
      }
      const bool dense = s.phase == TaskPhase::RToHandoff || s.phase == TaskPhase::Handoff;
      if (s.step % (dense ? gen.frame_every_bimanual : gen.frame_every) == 0) {
        trial.frames.images.push_back(render_observation(s, ec.sim, style));
        trial.frames.labels.push_back(task_context(s, ec.sim));
      }
    };
    record(runner.state());
    while (!runner.finished()) {
      runner.step(human.act(runner.state(), runner.alpha()));
      record(runner.state());
    }
    const SimState& last = runner.state();
    if (trial.left.samples.back().t < last.clock) {
      trial.left.samples.push_back({last.clock, last.left.p, last.left.q, last.left.grip});
      trial.right.samples.push_back({last.clock, last.right.p, last.right.q, last.right.grip});
    }
    trial.success = runner.log().success;
    out.push_back(std::move(trial));
  }
  return out;
}

std::map<TaskPhase, DmpModel> fit_phase_dmps(const DesiredTrajectory& desired, std::span<const RegisteredDemoSet> sets,
                                             const DmpParams& params, double still_tol) {
  std::map<TaskPhase, DmpModel> out;
  if (desired.grid.size() < 3) throw InsufficientDataError("desired trajectory grid too short");
  for (const RegisteredDemoSet& set : sets) {
    if (set.demos.empty()) throw InsufficientDataError("empty demo set");
    const Trajectory& ref = set.demos[set.reference_index];
    const ArmDesiredTrajectory& arm = desired.arm(set.arm);
    const std::size_t G = desired.grid.size();
    const double t0 = ref.samples.front().t;
    const double dur = ref.duration();
    if (!(dur > 0.0)) throw InsufficientDataError("reference demo has zero duration");

    std::vector<std::size_t> bounds{0};
    for (std::size_t k = 1; k < ref.size(); ++k) {
      if (ref.samples[k].grip != ref.samples[k - 1].grip) {
        const double u = (ref.samples[k].t - t0) / dur;
        bounds.push_back(static_cast<std::size_t>(std::lround(u * static_cast<double>(G - 1))));
      }
    }
    bounds.push_back(G - 1);

    const std::array<TaskPhase, 4> right{TaskPhase::RApproach1, TaskPhase::RToHandoff, TaskPhase::RGrasp3,
                                         TaskPhase::RTo1};
    const std::array<std::optional<TaskPhase>, 4> left{TaskPhase::Handoff, TaskPhase::LTo2, std::nullopt,
                                                       TaskPhase::LTo3};
    for (std::size_t j = 0; j + 1 < bounds.size() && j < 4; ++j) {
      const std::optional<TaskPhase> phase =
          set.arm == Arm::Right ? std::optional<TaskPhase>(right[j]) : left[j];
      if (!phase) continue;
      std::size_t a = bounds[j];
      std::size_t b = bounds[j + 1];
      if (b <= a + 2) continue;
      auto row = [&](std::size_t g) -> Vec3 { return arm.mean.row(static_cast<Eigen::Index>(g)).transpose(); };
      std::size_t h = a;
      while (h < b && (row(h + 1) - row(a)).norm() < still_tol) ++h;
      std::size_t e = b;
      while (e > h && (row(e - 1) - row(b)).norm() < still_tol) --e;
      a = h;
      b = e;
      if (b < a + 2) continue;

      Trajectory seg;
      seg.arm = set.arm;
      for (std::size_t g = a; g <= b; ++g)
        seg.samples.push_back({(desired.grid[g] - desired.grid[a]) * arm.duration, row(g), Quat::Identity(), false});
      try {
        DmpModel model = fit_weights(seg, params);
        model.arm = set.arm;
        out.emplace(*phase, std::move(model));
      } catch (const DegenerateAmplitudeError&) {
        // no usable motion in this segment, the runner falls back to a straight line
      }
    }
  }
  return out;
}

}  // namespace lfd
