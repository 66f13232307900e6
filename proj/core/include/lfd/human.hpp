#pragma once

#include "lfd/rng.hpp"
#include "lfd/sim.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>

namespace lfd {

struct HumanAgentConfig {
  double gain = 2.0;                   // 1/s, proportional pursuit of the sub-target
  double noise = 2e-5;                 // m per step on the master, per axis
  std::size_t reaction_delay = 10;     // steps between perceiving and acting
  double workspace_half_width = 0.03;  // master cube half-width (m)
  double clutch_time = 0.6;            // s spent re-centring
  double v_max = 0.04;                 // preferred slave speed (m/s)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Operator input for one control step, indexed by arm_index(): master
/// increments, clutch state and gripper levels.
struct HumanInput {
  std::array<Vec3, 2> dPh{Vec3::Zero(), Vec3::Zero()};
  std::array<bool, 2> engaged{true, true};
  std::array<bool, 2> grip{false, false};
  std::array<bool, 2> clutch_event{false, false};
};

/// Scripted stand-in for the operator. Pursues the active arm's phase target
/// with a proportional law, acts through a reaction-delay queue, and clutches
/// a master when its next position would leave the workspace cube.
///
/// The operator yields to the robot: the commanded master increment is scaled
/// by the blending weight shown on the previous step.
class ScriptedHuman {
 public:
  ScriptedHuman(const HumanAgentConfig& agent, const SimConfig& sim, double tau, const SimState& initial);

  HumanInput act(const SimState& state, double alpha_shown);

  [[nodiscard]] const std::array<Vec3, 2>& master() const { return master_; }
  [[nodiscard]] std::size_t clutch_count() const { return clutches_; }

 private:
  struct Action {
    std::array<Vec3, 2> dPh{Vec3::Zero(), Vec3::Zero()};
    std::array<bool, 2> grip{false, false};
  };

  Action decide(const SimState& state, double alpha_shown);

  HumanAgentConfig agent_;
  SimConfig sim_;
  double tau_;
  Rng rng_;
  std::deque<Action> queue_;
  std::array<Vec3, 2> master_{Vec3::Zero(), Vec3::Zero()};
  std::array<std::size_t, 2> clutch_left_{0, 0};
  std::array<bool, 2> want_grip_{false, false};
  std::size_t clutch_steps_;
  std::size_t clutches_ = 0;
};

}  // namespace lfd
