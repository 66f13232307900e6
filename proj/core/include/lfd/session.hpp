#pragma once

#include "lfd/episode.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lfd {

inline constexpr int kProtocolVersion = 1;

struct InputMessage {
  std::uint64_t seq = 0;
  std::array<Vec3, 2> dP{Vec3::Zero(), Vec3::Zero()};  // master units, indexed by arm_index
  std::array<bool, 2> clutch{false, false};           // held = disengaged
  std::array<bool, 2> grip{false, false};
  double client_time = 0.0;
};

struct ControlMessage {
  std::uint64_t seq = 0;
  std::string action;  // start, pause, reset
  std::optional<RunMode> mode;
  std::optional<std::uint64_t> seed;
};

using ClientMessage = std::variant<InputMessage, ControlMessage>;

/// Throws FormatError on malformed text, unknown types or bad fields.
ClientMessage parse_client_message(std::string_view text);
nlohmann::json to_json(const InputMessage& m);
nlohmann::json to_json(const ControlMessage& m);

/// Per-tick reduction of queued inputs: position increments are latest-wins,
/// clutch and grip edges are never dropped. A message that changes a clutch
/// or grip level ends the tick, so later edges wait for the next one.
class InputCoalescer {
 public:
  void push(const InputMessage& m) { queue_.push_back(m); }
  HumanInput drain();
  void clear();

  [[nodiscard]] std::size_t pending() const { return queue_.size(); }

 private:
  std::deque<InputMessage> queue_;
  std::array<bool, 2> clutch_{false, false};
  std::array<bool, 2> grip_{false, false};
};

enum class SessionStatus { Idle, Running, Paused, Finished };

std::string_view status_name(SessionStatus s);

struct SessionOptions {
  RunMode mode = RunMode::Shared;
  std::uint64_t seed = 0;
  double tick_hz = 50.0;
  bool autostart = true;
};

/// Server side of one interactive episode, independent of the transport.
/// Outgoing messages carry a strictly increasing sequence number; incoming
/// ones must too.
class Session {
 public:
  Session(const EpisodeModels& models, const EpisodeConfig& cfg, const SessionOptions& opts);

  nlohmann::json hello();
  /// Replies (ack or error) to one client text frame. Never throws on bad input.
  std::vector<nlohmann::json> handle(std::string_view text);
  /// One simulation step when running; the resulting state message.
  std::optional<nlohmann::json> tick();
  nlohmann::json state_message();

  [[nodiscard]] SessionStatus status() const { return status_; }
  [[nodiscard]] const EpisodeRunner& runner() const { return *runner_; }
  [[nodiscard]] RunMode mode() const { return opts_.mode; }
  [[nodiscard]] const SessionOptions& options() const { return opts_; }
  /// Log of the episode that just finished; cleared by take_completed().
  std::optional<EpisodeLog> take_completed();

 private:
  nlohmann::json error(const std::string& message, std::optional<std::uint64_t> ack = std::nullopt);
  nlohmann::json ack(std::uint64_t client_seq);
  void restart();

  const EpisodeModels& models_;
  EpisodeConfig cfg_;
  SessionOptions opts_;
  std::unique_ptr<EpisodeRunner> runner_;
  InputCoalescer inputs_;
  SessionStatus status_ = SessionStatus::Idle;
  std::uint64_t out_seq_ = 0;
  std::optional<std::uint64_t> in_seq_;
  int last_context_ = -1;
  std::optional<EpisodeLog> completed_;
};

}  // namespace lfd
