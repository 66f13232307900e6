#include "lfd/errors.hpp"
#include "lfd/io.hpp"
#include "lfd/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lfd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lfd_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Trajectory wiggly(Arm arm, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Trajectory t;
  t.arm = arm;
  for (std::size_t i = 0; i < n; ++i) {
    TrajectorySample s;
    s.t = 0.05 * static_cast<double>(i);
    s.p = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.01;
    s.q = Quat(Eigen::AngleAxisd(rng.uniform(-1, 1), Vec3(rng.normal(), rng.normal(), rng.normal()).normalized()));
    s.grip = i % 3 == 0;
    t.samples.push_back(s);
  }
  return t;
}

void expect_same(const Trajectory& a, const Trajectory& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.arm, b.arm);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].t, b.samples[i].t);
    EXPECT_EQ(a.samples[i].p, b.samples[i].p);
    EXPECT_EQ(a.samples[i].q.coeffs(), b.samples[i].q.coeffs());
    EXPECT_EQ(a.samples[i].grip, b.samples[i].grip);
  }
}

}  // namespace

TEST(Base64, RoundTripIsBitExact) {
  const std::vector<double> v{0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e17, std::numeric_limits<double>::infinity()};
  for (std::size_t n = 0; n <= v.size(); ++n) {
    const std::vector<double> head(v.begin(), v.begin() + static_cast<long>(n));
    const auto back = decode_f64(encode_f64(head));
    ASSERT_EQ(back.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(std::memcmp(&back[i], &head[i], 8), 0);
  }
  EXPECT_EQ(encode_f64(std::vector<double>{1.0}), "AAAAAAAA8D8=");
  EXPECT_THROW(decode_f64("AAAA"), FormatError);
}

TEST(Config, DefaultsRoundTrip) {
  const PipelineConfig cfg;
  const nlohmann::json j = config_to_json(cfg);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_EQ(j.at("demo").at("count"), 36);
  EXPECT_EQ(j.at("train").at("lr"), 1e-4);
}

TEST(Config, MissingKeysKeepDefaults) {
  const PipelineConfig cfg = config_from_json(nlohmann::json::parse(R"({"blend": {"tau": 0.25}})"));
  EXPECT_EQ(cfg.episode.blend.tau, 0.25);
  EXPECT_EQ(cfg.episode.blend.lambda, 0.5);
  EXPECT_EQ(cfg.demos, 36u);
}

TEST(Config, RejectsUnknownKeysWrongTypesAndInvalidValues) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"blend": {"tua": 0.25}})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"blend": {"tau": "x"}})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"blend": {"lambda": 1.5}})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[]")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"demo": {"count": -1}})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"seeds": {"demo": 1.5}})")), FormatError);
}

TEST(Config, FileRoundTrip) {
  const fs::path dir = scratch("config");
  PipelineConfig cfg;
  cfg.episodes = 3;
  cfg.seeds.episode = 40;
  save_config(dir / "c.json", cfg);
  const PipelineConfig back = load_config(dir / "c.json");
  EXPECT_EQ(back.episodes, 3u);
  EXPECT_EQ(back.seeds.episode, 40u);
  EXPECT_THROW(load_config(dir / "missing.json"), Error);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), FormatError);
}

TEST(Demo, RoundTripIsExact) {
  const Trajectory l = wiggly(Arm::Left, 1, 30), r = wiggly(Arm::Right, 2, 30);
  std::stringstream ss;
  write_demo(ss, l, r);
  const auto [l2, r2] = read_demo(ss);
  expect_same(l, l2);
  expect_same(r, r2);
  std::stringstream bad("{\"t\": 0}\n");
  EXPECT_THROW(read_demo(bad), FormatError);
}

TEST(Frames, RoundTripAtByteResolution) {
  std::vector<Image> imgs;
  for (int k = 0; k < 3; ++k) {
    Image im(8, 8);
    for (std::size_t i = 0; i < im.data.size(); ++i) im.data[i] = static_cast<float>((i * 7 + static_cast<std::size_t>(k)) % 256) / 255.0f;
    imgs.push_back(im);
  }
  std::stringstream ss;
  write_frames(ss, imgs);
  const auto back = read_frames(ss);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back[k].data[i], imgs[k].data[i], 1e-7);
  std::stringstream junk("XXXXXXXX");
  EXPECT_THROW(read_frames(junk), FormatError);
}

TEST(Trials, SaveAndLoadDirectory) {
  const fs::path dir = scratch("trials");
  EpisodeConfig cfg;
  const auto trials = generate_demos(2, cfg, {}, 5);
  save_trials(dir, trials);
  EXPECT_TRUE(fs::exists(dir / "demo_000.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "frames_001.bin"));
  EXPECT_TRUE(fs::exists(dir / "labels_001.json"));
  const auto demos = load_demos(dir);
  ASSERT_EQ(demos.size(), 2u);
  expect_same(demos[1].second, trials[1].right);
  const Dataset d = load_dataset(dir);
  EXPECT_EQ(d.size(), trials[0].frames.size() + trials[1].frames.size());
  EXPECT_EQ(d.labels.front(), trials[0].frames.labels.front());
  EXPECT_EQ(d.images.front(), trials[0].frames.images.front());
}

TEST(Models, RegisteredDesiredAndDmpsRoundTrip) {
  std::vector<Trajectory> demos;
  for (int i = 0; i < 3; ++i) {
    Trajectory d = oracle::min_jerk_demo(Vec3::Zero(), Vec3(0.05, 0.02 + 0.002 * i, 0.01), 1.0 + 0.1 * i, 40);
    for (std::size_t k = 0; k < d.size(); ++k) d.samples[k].p.z() += 0.01 * std::sin(M_PI * static_cast<double>(k) / 39.0);
    demos.push_back(d);
  }
  std::vector<RegisteredDemoSet> sets{register_demos(demos)};
  const auto sets2 = registered_from_json(registered_to_json(sets));
  ASSERT_EQ(sets2.size(), 1u);
  EXPECT_EQ(sets2[0].reference_index, sets[0].reference_index);
  EXPECT_EQ(sets2[0].transforms[1].R, sets[0].transforms[1].R);
  expect_same(sets2[0].demos[2], sets[0].demos[2]);

  DesiredFitOptions o;
  o.grid_n = 20;
  o.hyper = GprHyper{0.1, 1e-3, 1e-6};
  const DesiredTrajectory d = fit_desired_trajectory(sets, o);
  const DesiredTrajectory d2 = desired_from_json(desired_to_json(d));
  EXPECT_EQ(d2.grid, d.grid);
  EXPECT_EQ(d2.arm(Arm::Right).mean, d.arm(Arm::Right).mean);
  EXPECT_EQ(d2.arm(Arm::Right).variance, d.arm(Arm::Right).variance);
  EXPECT_EQ(d2.arm(Arm::Right).hyper, d.arm(Arm::Right).hyper);

  std::map<TaskPhase, DmpModel> dmps{{TaskPhase::RTo1, fit_weights(demos[0], make_dmp_params(10))}};
  const auto dmps2 = dmps_from_json(dmps_to_json(dmps));
  ASSERT_EQ(dmps2.count(TaskPhase::RTo1), 1u);
  const DmpModel& m = dmps2.at(TaskPhase::RTo1);
  EXPECT_EQ(m.weights, dmps.at(TaskPhase::RTo1).weights);
  EXPECT_EQ(m.params.centers, dmps.at(TaskPhase::RTo1).params.centers);
  EXPECT_EQ(m.degenerate, dmps.at(TaskPhase::RTo1).degenerate);
  EXPECT_THROW(dmps_from_json(nlohmann::json{{"type", "other"}}), FormatError);
}

TEST(Log, RoundTripPreservesEveryRecord) {
  EpisodeConfig cfg;
  const EpisodeLog log = run_episode(RunMode::Manual, {}, cfg, {}, 2);
  std::stringstream ss;
  write_log(ss, log);
  const std::string text = ss.str();
  const EpisodeLog back = read_log(ss);
  EXPECT_EQ(back.steps, log.steps);
  EXPECT_EQ(back.success, log.success);
  EXPECT_EQ(back.events.size(), log.events.size());
  EXPECT_EQ(compute_metrics(back), compute_metrics(log));
  std::stringstream again;
  write_log(again, back);
  EXPECT_EQ(again.str(), text);

  std::stringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_log(truncated), FormatError);
}

TEST(MetricsFile, RoundTrip) {
  MetricsFile f{"shared", {{3, true, {0.5, 12.0, 9.0, 1}}, {4, false, {0.7, 120.0, 3.0, 0}}}};
  EXPECT_EQ(metrics_from_json(metrics_to_json(f)), f);
  EXPECT_THROW(metrics_from_json(nlohmann::json::parse(R"({"mode": "x"})")), FormatError);
}
