#pragma once

#include "lfd/context.hpp"
#include "lfd/dmp.hpp"
#include "lfd/episode.hpp"
#include "lfd/gpr.hpp"
#include "lfd/registration.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lfd {

struct DmpSettings {
  std::size_t kernels = 50;
  double alpha_z = 25.0;
  double beta_z = 6.25;
  double alpha_x = 8.0;
  double still_tol = 1e-3;  // stationary head/tail trimmed before fitting (m)

  [[nodiscard]] DmpParams params() const;
};

struct Seeds {
  std::uint64_t demo = 7;
  std::uint64_t target_demo = 99;
  std::uint64_t classifier = 5;  // weight initialization
  std::uint64_t train = 11;
  std::uint64_t finetune = 13;
  std::uint64_t episode = 0;  // first episode seed; run k uses episode + k
};

struct PipelineConfig {
  std::string data_dir = "data";
  std::string target_dir = "data_target";
  std::string model_dir = "models";
  std::string results_dir = "results";
  EpisodeConfig episode;
  HumanAgentConfig agent;
  TrainConfig train;
  std::size_t freeze = 2;  // layers held fixed by finetune
  DmpSettings dmp;
  DesiredFitOptions gpr{400, std::nullopt, 40, 150, {}};
  DemoGenConfig demo;
  std::size_t demos = 36;
  std::size_t target_demos = 12;
  std::size_t episodes = 20;
  Seeds seeds;

  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys and wrong types raise FormatError.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Little-endian float64 blocks as base64 text.
std::string encode_f64(std::span<const double> values);
std::vector<double> decode_f64(const std::string& text);

/// One JSON object per line: {t, left:{p,q,grip}, right:{p,q,grip}}; q is [w,x,y,z].
void write_demo(std::ostream& os, const Trajectory& left, const Trajectory& right);
std::pair<Trajectory, Trajectory> read_demo(std::istream& is);
void save_demo(const std::filesystem::path& path, const Trajectory& left, const Trajectory& right);
std::pair<Trajectory, Trajectory> load_demo(const std::filesystem::path& path);

/// Magic, header length, JSON header {count, width, height, dtype u8}, then
/// count * width * height bytes (intensity * 255).
void write_frames(std::ostream& os, std::span<const Image> images);
std::vector<Image> read_frames(std::istream& is);
void save_frames(const std::filesystem::path& path, std::span<const Image> images);
std::vector<Image> load_frames(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, std::span<const int> labels);
std::vector<int> load_labels(const std::filesystem::path& path);

/// Writes demo_NNN.jsonl, frames_NNN.bin and labels_NNN.json per trial.
void save_trials(const std::filesystem::path& dir, std::span<const DemoTrial> trials);
/// Every demo_*.jsonl in name order.
std::vector<std::pair<Trajectory, Trajectory>> load_demos(const std::filesystem::path& dir);
/// Every frames_*.bin with its labels file, in name order.
Dataset load_dataset(const std::filesystem::path& dir);

nlohmann::json registered_to_json(std::span<const RegisteredDemoSet> sets);
std::vector<RegisteredDemoSet> registered_from_json(const nlohmann::json& j);

nlohmann::json desired_to_json(const DesiredTrajectory& d);
DesiredTrajectory desired_from_json(const nlohmann::json& j);

nlohmann::json dmps_to_json(const std::map<TaskPhase, DmpModel>& dmps);
std::map<TaskPhase, DmpModel> dmps_from_json(const nlohmann::json& j);

/// Header line (mode, seed, dt, success, perceived sites, events, step count)
/// followed by one line per step record.
void write_log(std::ostream& os, const EpisodeLog& log);
EpisodeLog read_log(std::istream& is);
void save_log(const std::filesystem::path& path, const EpisodeLog& log);
EpisodeLog load_log(const std::filesystem::path& path);

struct MetricsRun {
  std::uint64_t seed = 0;
  bool success = false;
  Metrics metrics;

  bool operator==(const MetricsRun&) const = default;
};

struct MetricsFile {
  std::string mode;
  std::vector<MetricsRun> runs;

  bool operator==(const MetricsFile&) const = default;
};

nlohmann::json metrics_to_json(const MetricsFile& m);
MetricsFile metrics_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace lfd
