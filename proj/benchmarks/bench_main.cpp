#include "lfd/context.hpp"
#include "lfd/episode.hpp"
#include "lfd/gpr.hpp"
#include "lfd/registration.hpp"
#include "lfd/rng.hpp"
#include "lfd/shared_control.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace lfd;

namespace {

std::vector<Vec3> wave(std::size_t n, double phase) {
  std::vector<Vec3> pts;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n - 1);
    pts.emplace_back(0.05 * u, 0.02 * std::sin(6.0 * u + phase), 0.01 * std::cos(4.0 * u));
  }
  return pts;
}

void BM_Dtw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = wave(n, 0.0), b = wave(n + n / 5, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(dtw_align(std::span<const Vec3>(a), std::span<const Vec3>(b)).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dtw)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNSquared);

void BM_Icp(benchmark::State& state) {
  const auto target = wave(static_cast<std::size_t>(state.range(0)), 0.0);
  RigidTransform T;
  T.R = Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  T.t = Vec3(0.01, -0.02, 0.005);
  std::vector<Vec3> source;
  for (const auto& p : target) source.push_back(T.apply(p));
  for (auto _ : state)
    benchmark::DoNotOptimize(icp_align(std::span<const Vec3>(source), std::span<const Vec3>(target)).residual_history.back());
}
BENCHMARK(BM_Icp)->Arg(200)->Arg(800);

void BM_GprFitPredict(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> x, f, xs;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(rng.uniform(0.0, 1.0));
    f.push_back(0.02 * std::sin(5.0 * x.back()) + 1e-3 * rng.normal());
  }
  for (int i = 0; i < 400; ++i) xs.push_back(i / 399.0);
  const GprHyper h{0.1, 4e-4, 1e-6};
  for (auto _ : state) benchmark::DoNotOptimize(gpr_predict(gpr_fit(x, f, h), xs).mean.data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GprFitPredict)->RangeMultiplier(2)->Range(50, 400)->Complexity(benchmark::oNCubed);

void BM_ClassifierForward(benchmark::State& state) {
  const Classifier clf = make_classifier(ClassifierArch::desk(), 5);
  Image img(clf.arch.input_size, clf.arch.input_size);
  Rng rng(2);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(forward(clf, img));
}
BENCHMARK(BM_ClassifierForward);

void BM_ComputeAlpha(benchmark::State& state) {
  const std::array<double, 3> p{0.2, 0.7, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(compute_alpha(p, {0, 1.0}, 0.5).alpha);
}
BENCHMARK(BM_ComputeAlpha);

void BM_ManualEpisode(benchmark::State& state) {
  const EpisodeModels none;
  const EpisodeConfig cfg;
  const HumanAgentConfig agent;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(RunMode::Manual, none, cfg, agent, seed++).steps.size());
}
BENCHMARK(BM_ManualEpisode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
