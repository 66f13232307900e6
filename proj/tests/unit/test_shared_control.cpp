#include "lfd/errors.hpp"
#include "lfd/shared_control.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lfd;

TEST(RoleAdaptation, ExhaustiveSimplexSweepMatchesTable) {
  const double lambda = 0.5;
  std::size_t checked = 0;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; i + j <= 20; ++j) {
      const std::array<double, 3> p{0.05 * i, 0.05 * j, 0.05 * (20 - i - j)};
      for (int prev = 0; prev < 3; ++prev) {
        const AlphaUpdate u = compute_alpha(p, RoleState{prev, 0.3}, lambda);
        EXPECT_EQ(u.alpha, oracle::alpha_table(p, prev, lambda)) << i << "," << j << " prev " << prev;
        EXPECT_EQ(u.state.prev_context, u.context);
        ++checked;
      }
    }
  EXPECT_EQ(checked, 231u * 3u);
}

TEST(RoleAdaptation, MarginExactlyLambdaSwitchesAuthority) {
  // margins of exactly 0.5 in binary
  EXPECT_EQ(compute_alpha({0.75, 0.25, 0.0}, {1, 1.0}, 0.5).alpha, 0.0);
  EXPECT_EQ(compute_alpha({0.25, 0.75, 0.0}, {0, 1.0}, 0.5).alpha, 1.0);
  EXPECT_EQ(compute_alpha({0.0, 0.25, 0.75}, {1, 1.0}, 0.5).alpha, 1.0);
  // just below the threshold keeps blending
  EXPECT_EQ(compute_alpha({0.625, 0.25, 0.125}, {1, 1.0}, 0.5).alpha, 0.75);
  EXPECT_EQ(compute_alpha({0.25, 0.625, 0.125}, {0, 1.0}, 0.5).alpha, 0.25);
}

TEST(RoleAdaptation, UnchangedContextUsesOwnProbability) {
  const AlphaUpdate a = compute_alpha({0.8, 0.1, 0.1}, {0, 1.0}, 0.5);
  EXPECT_EQ(a.delta_pc, 0.0);
  EXPECT_DOUBLE_EQ(a.alpha, 0.2);
  const AlphaUpdate b = compute_alpha({0.1, 0.2, 0.7}, {2, 1.0}, 0.5);
  EXPECT_DOUBLE_EQ(b.alpha, 0.7);
}

TEST(RoleAdaptation, TiesGoToLowestIndex) {
  const AlphaUpdate u = compute_alpha({0.4, 0.4, 0.2}, {2, 1.0}, 0.5);
  EXPECT_EQ(u.context, 0);
  EXPECT_DOUBLE_EQ(u.alpha, 0.8);
}

TEST(Blend, Formula) {
  const Vec3 h(1.0, 0.0, -2.0), r(0.0, 3.0, 1.0);
  EXPECT_TRUE(blend(h, r, 1.0, 0.5).isApprox(0.5 * h));
  EXPECT_TRUE(blend(h, r, 0.0, 0.5).isApprox(0.5 * r));
  EXPECT_TRUE(blend(h, r, 0.25, 2.0).isApprox(2.0 * (0.25 * h + 0.75 * r)));
}

TEST(Modes, FromAlpha) {
  EXPECT_EQ(mode_of(1.0), ControlMode::Manual);
  EXPECT_EQ(mode_of(0.0), ControlMode::Autonomous);
  EXPECT_EQ(mode_of(0.4), ControlMode::AdaptiveShared);
  EXPECT_EQ(mode_name(ControlMode::AdaptiveShared), "shared");
  EXPECT_THROW(mode_of(1.5), InvalidArgument);
}

TEST(ComposeCommand, KeepsOperatorOrientationAndGripAndCapsSpeed) {
  BlendConfig cfg;
  Command human;
  human.dP = Vec3(0.001, 0, 0);
  human.q = Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ()));
  human.grip = true;
  const Command out = compose_command(human, Vec3(0, 0.01, 0), 0.5, cfg, 0.02);
  EXPECT_TRUE(out.q.isApprox(human.q));
  EXPECT_TRUE(out.grip);
  EXPECT_NEAR(out.dP.norm(), cfg.v_max * 0.02, 1e-15);
  const Command slow = compose_command(human, Vec3::Zero(), 1.0, cfg, 0.02);
  EXPECT_TRUE(slow.dP.isApprox(Vec3(0.0005, 0, 0)));
}

TEST(RobotIncrement, ProgressIsMonotoneAndStepCapped) {
  std::vector<Vec3> ref;
  for (int i = 0; i <= 10; ++i) ref.emplace_back(0.01 * i, 0, 0);
  BlendConfig cfg;
  RobotIncrement r = robot_increment(ref, Vec3(0.031, 0.001, 0), 0, cfg, 0.02);
  EXPECT_EQ(r.progress, 3u);
  EXPECT_LE(r.dPr.norm(), cfg.v_max * 0.02 + 1e-15);
  EXPECT_GT(r.dPr.x(), 0.0);
  // never moves backwards even when the pose is near an earlier point
  r = robot_increment(ref, Vec3(0.0, 0, 0), 6, cfg, 0.02);
  EXPECT_EQ(r.progress, 6u);
  // at the end it homes onto the final point
  r = robot_increment(ref, Vec3(0.1, 0, 0.0005), 10, cfg, 0.02);
  EXPECT_TRUE(r.dPr.isApprox(Vec3(0, 0, -0.0005)));
  EXPECT_THROW(robot_increment({}, Vec3::Zero(), 0, cfg, 0.02), InvalidArgument);
}

TEST(ResamplePath, UniformSpacingWithEndpoints) {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0.1, 0.05, 0)};
  const auto out = resample_path(pts, 0.02);
  ASSERT_EQ(out.size(), 9u);
  EXPECT_EQ(out.front(), pts.front());
  EXPECT_TRUE(out.back().isApprox(pts.back()));
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    if (i == 5) continue;  // corner cut
    EXPECT_NEAR((out[i] - out[i - 1]).norm(), 0.02, 1e-12);
  }
  EXPECT_EQ(resample_path(std::vector<Vec3>{Vec3::Ones()}, 0.1).size(), 1u);
  EXPECT_THROW(resample_path(pts, 0.0), InvalidArgument);
}

TEST(CapNorm, Behaviour) {
  EXPECT_EQ(cap_norm(Vec3(3, 4, 0), 10.0), Vec3(3, 4, 0));
  EXPECT_TRUE(cap_norm(Vec3(3, 4, 0), 1.0).isApprox(Vec3(0.6, 0.8, 0)));
  EXPECT_EQ(cap_norm(Vec3(3, 4, 0), 0.0), Vec3::Zero());
}
