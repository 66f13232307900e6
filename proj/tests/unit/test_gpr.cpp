#include "lfd/errors.hpp"
#include "lfd/gpr.hpp"
#include "lfd/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace lfd;

namespace {

struct Sample {
  std::vector<double> x, f;
};

Sample random_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, 1.0);
    s.x.push_back(x);
    s.f.push_back(0.03 * std::sin(6.0 * x) + 0.01 * rng.normal());
  }
  return s;
}

std::vector<double> grid(std::size_t n, double lo, double hi) {
  std::vector<double> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace

TEST(Kernel, SquaredExponentialValues) {
  const GprHyper h{0.2, 2.0, 1e-6};
  EXPECT_DOUBLE_EQ(se_kernel(0.3, 0.3, h), 2.0);
  EXPECT_NEAR(se_kernel(0.0, 0.2, h), 2.0 * std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(se_kernel(0.1, 0.7, h), se_kernel(0.7, 0.1, h));
}

TEST(Gpr, MatchesDenseInverseOracle) {
  const std::vector<GprHyper> hypers{{0.1, 1e-3, 1e-6}, {0.3, 1e-2, 1e-4}, {0.05, 1.0, 1e-2}};
  for (std::size_t n : {1u, 2u, 5u, 17u, 50u}) {
    const Sample s = random_sample(n, 100 + n);
    const auto xs = grid(37, -0.2, 1.2);
    for (const GprHyper& h : hypers) {
      const GprModel m = gpr_fit(s.x, s.f, h);
      ASSERT_EQ(m.jitter, 0.0);
      const GprPrediction p = gpr_predict(m, xs);
      const oracle::DenseGp o = oracle::dense_gp(s.x, s.f, h, xs);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_NEAR(p.mean[i], o.mean[i], 1e-8) << "n=" << n << " i=" << i;
        EXPECT_NEAR(p.variance[i], std::max(0.0, o.variance[i]), 1e-8) << "n=" << n << " i=" << i;
      }
      EXPECT_NEAR(log_marginal_likelihood(m), o.lml, 1e-6 * std::max(1.0, std::abs(o.lml)));
    }
  }
}

TEST(Gpr, NoiselessInterpolationPassesThroughTrainingPoints) {
  const std::vector<double> x{0.0, 0.2, 0.45, 0.7, 1.0};
  const std::vector<double> f{0.01, -0.02, 0.015, 0.03, -0.005};
  const GprHyper h{0.2, 1e-3, 1e-12};
  const GprModel m = gpr_fit(x, f, h);
  const GprPrediction p = gpr_predict(m, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(p.mean[i], f[i], 1e-7);
    EXPECT_LT(p.variance[i], 1e-9);
  }
}

TEST(Gpr, FarFromDataRevertsToPrior) {
  const Sample s = random_sample(20, 3);
  const GprHyper h{0.05, 4e-4, 1e-6};
  const GprModel m = gpr_fit(s.x, s.f, h);
  const std::vector<double> far{5.0, -7.0};
  const GprPrediction p = gpr_predict(m, far);
  for (std::size_t i = 0; i < far.size(); ++i) {
    EXPECT_NEAR(p.mean[i], 0.0, 1e-12);
    EXPECT_NEAR(p.variance[i], h.signal_var, 1e-12);
  }
}

TEST(Gpr, VarianceNeverNegative) {
  std::vector<double> x(30, 0.5);
  std::vector<double> f(30, 0.01);
  const GprModel m = gpr_fit(x, f, {0.1, 1.0, 0.0});
  const GprPrediction p = gpr_predict(m, grid(11, 0.0, 1.0));
  for (double v : p.variance) EXPECT_GE(v, 0.0);
}

TEST(Gpr, DuplicateInputsNeedJitter) {
  const std::vector<double> x{0.1, 0.1, 0.1, 0.4};
  const std::vector<double> f{0.0, 0.0, 0.0, 1.0};
  const GprModel m = gpr_fit(x, f, {0.2, 1.0, 0.0});
  EXPECT_GT(m.jitter, 0.0);
  EXPECT_THROW(gpr_fit(x, f, {0.2, 1.0, 0.0}, JitterPolicy{1e-10, 0.0}), NotPositiveDefiniteError);
}

TEST(Gpr, RejectsBadInput) {
  const std::vector<double> x{0.0, 1.0};
  const std::vector<double> f{1.0};
  EXPECT_THROW(gpr_fit(x, f, {}), InvalidArgument);
  EXPECT_THROW(gpr_fit(std::vector<double>{}, std::vector<double>{}, {}), InsufficientDataError);
  EXPECT_THROW(gpr_fit(x, std::vector<double>{0.0, 0.0}, {-1.0, 1.0, 0.0}), InvalidArgument);
}

TEST(Gpr, HyperSearchPicksHighestLikelihood) {
  const Sample s = random_sample(40, 9);
  HyperGrid g;
  g.lengthscales = log_space(0.01, 1.0, 4);
  g.signal_vars = log_space(1e-5, 1e-2, 3);
  g.noise_vars = log_space(1e-6, 1e-3, 3);
  const GprHyper best = optimize_hyper(s.x, s.f, g);
  const double best_lml = log_marginal_likelihood(gpr_fit(s.x, s.f, best));
  for (double l : g.lengthscales)
    for (double sv : g.signal_vars)
      for (double nv : g.noise_vars) {
        const GprHyper h{l, sv, nv};
        EXPECT_LE(oracle::dense_gp(s.x, s.f, h, {}).lml, best_lml + 1e-6);
      }
}

TEST(Gpr, LogSpaceEndpoints) {
  const auto v = log_space(1e-4, 1.0, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_DOUBLE_EQ(v.front(), 1e-4);
  EXPECT_NEAR(v.back(), 1.0, 1e-15);
  EXPECT_NEAR(v[2], 1e-2, 1e-15);
}
