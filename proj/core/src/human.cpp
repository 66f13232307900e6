#include "lfd/human.hpp"

#include "lfd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lfd {

void HumanAgentConfig::validate() const {
  if (!(gain > 0.0)) throw InvalidArgument("HumanAgentConfig: gain must be > 0");
  if (!(workspace_half_width > 0.0)) throw InvalidArgument("HumanAgentConfig: workspace half-width must be > 0");
  if (!(noise >= 0.0) || !(clutch_time >= 0.0) || !(v_max > 0.0))
    throw InvalidArgument("HumanAgentConfig: noise, clutch_time must be >= 0 and v_max > 0");
}

ScriptedHuman::ScriptedHuman(const HumanAgentConfig& agent, const SimConfig& sim, double tau, const SimState& initial)
    : agent_(agent), sim_(sim), tau_(tau), rng_(agent.seed) {
  agent_.validate();
  if (!(tau > 0.0)) throw InvalidArgument("ScriptedHuman: tau must be > 0");
  clutch_steps_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(agent.clutch_time / sim.dt)));
  want_grip_ = {initial.left.grip, initial.right.grip};
  Action idle;
  idle.grip = want_grip_;
  queue_.assign(agent.reaction_delay, idle);
}

ScriptedHuman::Action ScriptedHuman::decide(const SimState& s, double alpha_shown) {
  Action a;
  if (s.phase == TaskPhase::Done) {
    a.grip = want_grip_;
    return a;
  }
  const Arm arm = active_arm(s.phase);
  const auto i = static_cast<std::size_t>(arm_index(arm));
  const Vec3 target = phase_target(s, sim_);
  const Vec3 err = target - s.tool(arm).p;

  const Vec3 slave_step = cap_norm(agent_.gain * err * sim_.dt, agent_.v_max * sim_.dt);
  a.dPh[i] = alpha_shown * slave_step / tau_;
  if (agent_.noise > 0.0) {
    const double nx = rng_.normal();
    const double ny = rng_.normal();
    const double nz = rng_.normal();
    a.dPh[i] += agent_.noise * Vec3(nx, ny, nz);
  }

  const double dist = err.norm();
  switch (s.phase) {
    case TaskPhase::RGrasp:
    case TaskPhase::Handoff:
    case TaskPhase::LGrasp2:
    case TaskPhase::RGrasp3:
      if (dist <= 0.5 * sim_.grasp_radius) want_grip_[i] = true;
      break;
    case TaskPhase::LPlace2:
    case TaskPhase::LPlace3:
    case TaskPhase::RPlace1:
      if (dist <= 0.5 * sim_.place_radius) want_grip_[i] = false;
      break;
    default:
      break;
  }
  // The right hand lets go once the left has taken the peg.
  if (s.peg.held_by == Arm::Left && s.right.grip) want_grip_[static_cast<std::size_t>(arm_index(Arm::Right))] = false;
  a.grip = want_grip_;
  return a;
}

HumanInput ScriptedHuman::act(const SimState& state, double alpha_shown) {
  queue_.push_back(decide(state, alpha_shown));
  const Action a = queue_.front();
  queue_.pop_front();

  HumanInput in;
  in.grip = a.grip;
  const double w = agent_.workspace_half_width;
  for (std::size_t i = 0; i < 2; ++i) {
    if (clutch_left_[i] > 0) {
      in.engaged[i] = false;
      if (--clutch_left_[i] == 0) {
        master_[i].setZero();
        in.engaged[i] = true;
        in.clutch_event[i] = true;
        ++clutches_;
      }
      continue;
    }
    const Vec3 next = master_[i] + a.dPh[i];
    if (next.cwiseAbs().maxCoeff() > w) {
      clutch_left_[i] = clutch_steps_;
      in.engaged[i] = false;
      continue;
    }
    master_[i] = next;
    in.dPh[i] = a.dPh[i];
  }
  return in;
}

}  // namespace lfd
