#include "lfd/session.hpp"

#include "lfd/errors.hpp"

namespace lfd {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 to_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class T>
std::array<T, 2> per_arm(const json& j, const char* key, T fallback, T (*conv)(const json&)) {
  std::array<T, 2> out{fallback, fallback};
  const auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_object()) throw FormatError(std::string(key) + " must be an object keyed by arm");
  for (const auto& item : it->items()) out[static_cast<std::size_t>(arm_index(parse_arm(item.key())))] = conv(item.value());
  return out;
}

Vec3 conv_vec(const json& j) { return to_vec3(j); }
bool conv_bool(const json& j) { return j.get<bool>(); }

std::uint64_t unsigned_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw FormatError(std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

json tool_json(const ToolState& t, bool engaged) {
  return {{"p", vec(t.p)}, {"q", json::array({t.q.w(), t.q.x(), t.q.y(), t.q.z()})}, {"grip", t.grip},
          {"engaged", engaged}};
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw FormatError("message must be a JSON object");
    const std::string type = j.at("type").get<std::string>();
    const auto seq = unsigned_field(j, "seq");
    if (type == "input") {
      InputMessage m;
      m.seq = seq;
      m.dP = per_arm<Vec3>(j, "dP", Vec3::Zero(), conv_vec);
      m.clutch = per_arm<bool>(j, "clutch", false, conv_bool);
      m.grip = per_arm<bool>(j, "grip", false, conv_bool);
      if (const auto it = j.find("client_time"); it != j.end()) m.client_time = it->get<double>();
      for (const auto& v : m.dP)
        if (!v.allFinite()) throw FormatError("dP must be finite");
      return m;
    }
    if (type == "control") {
      ControlMessage m;
      m.seq = seq;
      m.action = j.at("action").get<std::string>();
      if (m.action != "start" && m.action != "pause" && m.action != "reset")
        throw FormatError("unknown control action '" + m.action + "'");
      if (const auto it = j.find("mode"); it != j.end()) m.mode = parse_run_mode(it->get<std::string>());
      if (j.contains("seed")) m.seed = unsigned_field(j, "seed");
      return m;
    }
    throw FormatError("unknown message type '" + type + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed message: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed message: ") + e.what());
  }
}

json to_json(const InputMessage& m) {
  return {{"type", "input"},
          {"seq", m.seq},
          {"dP", {{"left", vec(m.dP[0])}, {"right", vec(m.dP[1])}}},
          {"clutch", {{"left", m.clutch[0]}, {"right", m.clutch[1]}}},
          {"grip", {{"left", m.grip[0]}, {"right", m.grip[1]}}},
          {"client_time", m.client_time}};
}

json to_json(const ControlMessage& m) {
  json j = {{"type", "control"}, {"seq", m.seq}, {"action", m.action}};
  if (m.mode) j["mode"] = run_mode_name(*m.mode);
  if (m.seed) j["seed"] = *m.seed;
  return j;
}

HumanInput InputCoalescer::drain() {
  HumanInput out;
  const std::array<bool, 2> was_clutched = clutch_;
  std::array<Vec3, 2> dP{Vec3::Zero(), Vec3::Zero()};
  while (!queue_.empty()) {
    const InputMessage m = queue_.front();
    queue_.pop_front();
    dP = m.dP;
    const bool edge = m.clutch != clutch_ || m.grip != grip_;
    clutch_ = m.clutch;
    grip_ = m.grip;
    if (edge) break;
  }
  for (std::size_t i = 0; i < 2; ++i) {
    out.engaged[i] = !clutch_[i];
    out.grip[i] = grip_[i];
    out.dPh[i] = out.engaged[i] ? dP[i] : Vec3::Zero();
    out.clutch_event[i] = was_clutched[i] && !clutch_[i];
  }
  return out;
}

void InputCoalescer::clear() {
  queue_.clear();
  clutch_ = {false, false};
  grip_ = {false, false};
}

std::string_view status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::Idle:
      return "idle";
    case SessionStatus::Running:
      return "running";
    case SessionStatus::Paused:
      return "paused";
    case SessionStatus::Finished:
      return "finished";
  }
  return "idle";
}

Session::Session(const EpisodeModels& models, const EpisodeConfig& cfg, const SessionOptions& opts)
    : models_(models), cfg_(cfg), opts_(opts) {
  if (!(opts_.tick_hz > 0.0)) throw InvalidArgument("tick rate must be positive");
  restart();
  if (opts_.autostart) status_ = SessionStatus::Running;
}

void Session::restart() {
  runner_ = std::make_unique<EpisodeRunner>(opts_.mode, models_, cfg_, opts_.seed);
  inputs_.clear();
  last_context_ = -1;
  status_ = SessionStatus::Idle;
}

json Session::hello() {
  return {{"type", "hello"},       {"seq", out_seq_++},
          {"version", kProtocolVersion}, {"tick_hz", opts_.tick_hz},
          {"dt", cfg_.sim.dt},     {"mode", run_mode_name(opts_.mode)},
          {"seed", opts_.seed},    {"status", status_name(status_)}};
}

json Session::error(const std::string& message, std::optional<std::uint64_t> ack) {
  json j = {{"type", "error"}, {"seq", out_seq_++}, {"message", message}};
  if (ack) j["ack"] = *ack;
  return j;
}

json Session::ack(std::uint64_t client_seq) {
  return {{"type", "ack"}, {"seq", out_seq_++}, {"ack", client_seq}, {"status", status_name(status_)},
          {"mode", run_mode_name(opts_.mode)}};
}

std::vector<json> Session::handle(std::string_view text) {
  ClientMessage msg;
  try {
    msg = parse_client_message(text);
  } catch (const FormatError& e) {
    return {error(e.what())};
  }
  const std::uint64_t seq = std::visit([](const auto& m) { return m.seq; }, msg);
  if (in_seq_ && seq <= *in_seq_) return {error("stale sequence number", seq)};
  in_seq_ = seq;

  if (const auto* in = std::get_if<InputMessage>(&msg)) {
    if (status_ != SessionStatus::Running) return {error("session not running", seq)};
    inputs_.push(*in);
    return {};
  }
  const auto& ctl = std::get<ControlMessage>(msg);
  if (ctl.action == "start") {
    if (status_ == SessionStatus::Finished) return {error("episode finished; reset first", seq)};
    if (ctl.mode && *ctl.mode != opts_.mode) return {error("mode can only change on reset", seq)};
    status_ = SessionStatus::Running;
  } else if (ctl.action == "pause") {
    if (status_ != SessionStatus::Running) return {error("session not running", seq)};
    status_ = SessionStatus::Paused;
  } else {
    SessionOptions next = opts_;
    if (ctl.mode) next.mode = *ctl.mode;
    if (ctl.seed) next.seed = *ctl.seed;
    const SessionOptions prev = opts_;
    opts_ = next;
    try {
      restart();
    } catch (const Error& e) {
      opts_ = prev;
      restart();
      return {error(e.what(), seq)};
    }
  }
  return {ack(seq)};
}

std::optional<json> Session::tick() {
  if (status_ != SessionStatus::Running) return std::nullopt;
  const StepRecord& r = runner_->step(inputs_.drain());
  if (r.framed) last_context_ = r.context;
  if (runner_->finished()) {
    status_ = SessionStatus::Finished;
    completed_ = runner_->log();
  }
  return state_message();
}

json Session::state_message() {
  const SimState& s = runner_->state();
  const EpisodeLog& log = runner_->log();
  const StepRecord& last = log.steps.back();
  json peg = {{"p", vec(s.peg.p)}, {"site", s.peg.site}};
  peg["held_by"] = s.peg.held_by ? json(arm_name(*s.peg.held_by)) : json(nullptr);
  json j = {{"type", "state"},
            {"seq", out_seq_++},
            {"status", status_name(status_)},
            {"step", s.step},
            {"clock", s.clock},
            {"phase", phase_name(s.phase)},
            {"alpha", runner_->alpha()},
            {"probs", runner_->probs()},
            {"context", last_context_},
            {"mode", mode_name(mode_of(runner_->alpha()))},
            {"run_mode", run_mode_name(opts_.mode)},
            {"tools", {{"left", tool_json(s.left, last.engaged[0])}, {"right", tool_json(s.right, last.engaged[1])}}},
            {"peg", std::move(peg)},
            {"done", runner_->finished()},
            {"success", log.success}};
  if (log.steps.size() >= 2) {
    const Metrics m = compute_metrics(log);
    j["metrics"] = {{"M", m.M}, {"T", m.T}, {"A", m.A}, {"C", m.C}};
  }
  return j;
}

std::optional<EpisodeLog> Session::take_completed() {
  std::optional<EpisodeLog> out;
  out.swap(completed_);
  return out;
}

}  // namespace lfd
