#include "lfd/errors.hpp"
#include "lfd/registration.hpp"
#include "lfd/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

using namespace lfd;

namespace {

std::vector<Vec3> curve(std::size_t n, double phase = 0.0) {
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n - 1);
    out.emplace_back(0.05 * std::cos(5.0 * u + phase), 0.03 * std::sin(8.2 * u), 0.02 * u + 0.01 * std::sin(5.0 * u));
  }
  return out;
}

Trajectory as_trajectory(const std::vector<Vec3>& pts, Arm arm = Arm::Right, double dt = 0.05) {
  Trajectory tr;
  tr.arm = arm;
  for (std::size_t k = 0; k < pts.size(); ++k) tr.samples.push_back({dt * static_cast<double>(k), pts[k], Quat::Identity(), false});
  return tr;
}

RigidTransform random_transform(Rng& rng, double max_angle, double max_shift) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  RigidTransform T;
  T.R = Eigen::AngleAxisd(rng.uniform(-max_angle, max_angle), axis).toRotationMatrix();
  T.t = Vec3(rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift));
  return T;
}

std::vector<int> series(int len, int code) {
  std::vector<int> s(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    s[static_cast<std::size_t>(i)] = code % 3;
    code /= 3;
  }
  return s;
}

Eigen::MatrixXd column(const std::vector<int>& s) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(s.size()), 1);
  for (std::size_t i = 0; i < s.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = s[i];
  return m;
}

}  // namespace

TEST(Kabsch, RecoversKnownRotationAndTranslation) {
  const auto P = curve(40);
  RigidTransform truth;
  truth.R = Eigen::AngleAxisd(std::numbers::pi / 2.0, Vec3::UnitZ()).toRotationMatrix();
  truth.t = Vec3(0.01, -0.02, 0.005);
  std::vector<Vec3> Q;
  for (const auto& p : P) Q.push_back(truth.apply(p));
  const RigidTransform est = kabsch_rotation(P, Q);
  EXPECT_LT(oracle::rotation_error(est.R, truth.R), 1e-12);
  EXPECT_LT((est.t - truth.t).norm(), 1e-12);
  EXPECT_NEAR(est.R.determinant(), 1.0, 1e-12);
}

TEST(Kabsch, NeverReturnsAReflection) {
  const auto P = curve(30);
  std::vector<Vec3> Q;
  for (const auto& p : P) Q.emplace_back(-p.x(), p.y(), p.z());  // mirrored
  const RigidTransform est = kabsch_rotation(P, Q);
  EXPECT_NEAR(est.R.determinant(), 1.0, 1e-12);
}

TEST(Kabsch, RejectsDegenerateInput) {
  const std::vector<Vec3> two{Vec3::Zero(), Vec3::UnitX()};
  EXPECT_THROW(kabsch_rotation(two, two), DegenerateGeometryError);
  const std::vector<Vec3> same(5, Vec3(0.1, 0.2, 0.3));
  EXPECT_THROW(kabsch_rotation(same, same), DegenerateGeometryError);
}

TEST(RigidTransform, ComposeAndInverse) {
  Rng rng(3);
  const RigidTransform a = random_transform(rng, 1.0, 0.1);
  const RigidTransform b = random_transform(rng, 1.0, 0.1);
  const Vec3 p(0.3, -0.1, 0.2);
  EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-14);
  EXPECT_LT((a.inverse().apply(a.apply(p)) - p).norm(), 1e-14);
  EXPECT_NEAR(RigidTransform::identity().rotation_angle(), 0.0, 1e-15);
}

TEST(Icp, RecoversRandomRigidTransforms) {
  Rng rng(11);
  const auto target = curve(200);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform truth = random_transform(rng, 0.5, 0.02);
    std::vector<Vec3> source;
    for (const auto& p : target) source.push_back(truth.apply(p));
    const IcpResult r = icp_align(std::span<const Vec3>(source), std::span<const Vec3>(target));
    const RigidTransform expected = truth.inverse();
    EXPECT_LT(oracle::rotation_error(r.transform.R, expected.R), 1e-6) << "trial " << trial;
    EXPECT_LT((r.transform.t - expected.t).norm(), 1e-6) << "trial " << trial;
  }
}

TEST(Icp, ResidualHistoryIsNonIncreasing) {
  Rng rng(5);
  const auto target = curve(150);
  const RigidTransform truth = random_transform(rng, 0.4, 0.01);
  std::vector<Vec3> source;
  for (const auto& p : curve(120, 0.05)) source.push_back(truth.apply(p));
  const IcpResult r = icp_align(std::span<const Vec3>(source), std::span<const Vec3>(target));
  ASSERT_FALSE(r.residual_history.empty());
  for (std::size_t k = 1; k < r.residual_history.size(); ++k)
    EXPECT_LE(r.residual_history[k], r.residual_history[k - 1] + 1e-15);
}

TEST(Icp, IdenticalInputsGiveIdentity) {
  const auto pts = curve(50);
  const IcpResult r = icp_align(std::span<const Vec3>(pts), std::span<const Vec3>(pts));
  EXPECT_LT(r.transform.rotation_angle(), 1e-12);
  EXPECT_LT(r.transform.t.norm(), 1e-12);
}

TEST(Dtw, MatchesBruteForceOnShortSeries) {
  for (int n = 1; n <= 4; ++n)
    for (int m = 1; m <= 4; ++m) {
      int total_a = 1, total_b = 1;
      for (int i = 0; i < n; ++i) total_a *= 3;
      for (int i = 0; i < m; ++i) total_b *= 3;
      for (int ca = 0; ca < total_a; ++ca)
        for (int cb = 0; cb < total_b; ++cb) {
          const auto a = series(n, ca);
          const auto b = series(m, cb);
          const DtwResult r = dtw_align(column(a), column(b));
          ASSERT_EQ(r.cost, static_cast<double>(oracle::brute_dtw_cost(a, b)));
          ASSERT_TRUE(r.path.is_valid(a.size(), b.size()));
        }
    }
}

TEST(Dtw, BruteForceVisitsEveryPath) {
  std::uint64_t paths = 0;
  oracle::brute_dtw_cost(std::vector<int>(4, 0), std::vector<int>(5, 1), &paths);
  EXPECT_EQ(paths, oracle::delannoy(3, 4));
}

TEST(Dtw, PathCostEqualsReportedCost) {
  const auto a = curve(30);
  const auto b = curve(45, 0.1);
  const DtwResult r = dtw_align(std::span<const Vec3>(a), std::span<const Vec3>(b));
  double sum = 0.0;
  for (const auto& [i, j] : r.path.pairs) sum += (a[i] - b[j]).norm();
  EXPECT_NEAR(sum, r.cost, 1e-12);
  EXPECT_EQ(r.path.pairs.front(), std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(r.path.pairs.back(), std::make_pair(std::size_t{29}, std::size_t{44}));
}

TEST(Dtw, IdenticalSeriesCostZeroOnTheDiagonal) {
  const auto a = curve(25);
  const DtwResult r = dtw_align(std::span<const Vec3>(a), std::span<const Vec3>(a));
  EXPECT_EQ(r.cost, 0.0);
  ASSERT_EQ(r.path.pairs.size(), a.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(r.path.pairs[k], std::make_pair(k, k));
}

TEST(Dtw, RejectsEmptyAndMismatchedDimensions) {
  EXPECT_THROW(dtw_align(Eigen::MatrixXd(0, 1), Eigen::MatrixXd::Zero(3, 1)), InvalidArgument);
  EXPECT_THROW(dtw_align(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(3, 1)), InvalidArgument);
}

TEST(WarpPath, Validity) {
  WarpPath p;
  p.pairs = {{0, 0}, {1, 1}, {1, 2}, {2, 2}};
  EXPECT_TRUE(p.is_valid(3, 3));
  p.pairs = {{0, 0}, {2, 2}};
  EXPECT_FALSE(p.is_valid(3, 3));
  p.pairs = {{0, 0}, {1, 1}};
  EXPECT_FALSE(p.is_valid(3, 3));
}

TEST(Warp, TimeStretchedCopyMapsBackOntoReference) {
  const std::size_t n = 80;
  std::vector<Vec3> ref_pts, slow_pts;
  for (std::size_t k = 0; k < n; ++k) ref_pts.push_back(oracle::min_jerk(Vec3::Zero(), Vec3(0.05, 0.02, 0.01), static_cast<double>(k), n - 1.0));
  for (std::size_t k = 0; k < 2 * n; ++k)
    slow_pts.push_back(oracle::min_jerk(Vec3::Zero(), Vec3(0.05, 0.02, 0.01), static_cast<double>(k), 2.0 * n - 1.0));
  const Trajectory ref = as_trajectory(ref_pts);
  const Trajectory slow = as_trajectory(slow_pts);
  const DtwResult d = dtw_align(std::span<const Vec3>(slow_pts), std::span<const Vec3>(ref_pts));
  std::vector<double> times;
  for (const auto& s : ref.samples) times.push_back(s.t);
  const Trajectory warped = warp_to_reference(slow, times, d.path);
  ASSERT_EQ(warped.size(), ref.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_EQ(warped.samples[k].t, ref.samples[k].t);
    worst = std::max(worst, (warped.samples[k].p - ref.samples[k].p).norm());
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Medoid, PicksTheCentralDemoWithLowestIndexOnTies) {
  std::vector<Trajectory> demos;
  for (double off : {0.0, 0.001, 0.002}) {
    auto pts = curve(30);
    for (auto& p : pts) p.x() += off;
    demos.push_back(as_trajectory(pts));
  }
  EXPECT_EQ(dtw_medoid(demos).first, 1u);
  const std::vector<Trajectory> twins{demos[0], demos[0]};
  EXPECT_EQ(dtw_medoid(twins).first, 0u);
}

TEST(RegisterDemos, AlignsTransformedCopiesOntoTheReference) {
  Rng rng(21);
  const auto base = curve(100);
  std::vector<Trajectory> demos;
  for (int k = 0; k < 4; ++k) {
    const RigidTransform T = k == 0 ? RigidTransform::identity() : random_transform(rng, 0.3, 0.01);
    std::vector<Vec3> pts;
    for (const auto& p : base) pts.push_back(T.apply(p));
    demos.push_back(as_trajectory(pts));
  }
  const RegisteredDemoSet set = register_demos(demos);
  ASSERT_EQ(set.demos.size(), 4u);
  const Trajectory& ref = set.demos[set.reference_index];
  for (const auto& d : set.demos) {
    ASSERT_EQ(d.size(), ref.size());
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_LT((d.samples[k].p - ref.samples[k].p).norm(), 1e-6);
  }
  EXPECT_EQ(set.sample_count(), ref.size());
}

TEST(RegisterDemos, RejectsMixedArmsAndEmptyInput) {
  std::vector<Trajectory> demos{as_trajectory(curve(20), Arm::Left), as_trajectory(curve(20), Arm::Right)};
  EXPECT_THROW(register_demos(demos), InvalidArgument);
  EXPECT_THROW(register_demos(std::span<const Trajectory>()), InvalidArgument);
}
