#include "lfd/io.hpp"

#include "lfd/errors.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace lfd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kFrameMagic[8] = {'L', 'F', 'D', 'I', 'M', 'G', '0', '1'};
constexpr int kFormatVersion = 1;

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json quat(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Vec3 to_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw FormatError(where + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Quat to_quat(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw FormatError(where + " must be a quaternion [w,x,y,z]");
  return Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

const json& req(const json& j, const char* key) {
  if (!j.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

// nlohmann converts -1 to a huge unsigned value without complaint.
template <class T>
T checked_get(const json& v) {
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!v.is_number_unsigned()) throw FormatError("expected a non-negative integer");
  }
  return v.get<T>();
}

template <class T>
T req_as(const json& j, const char* key) {
  try {
    return checked_get<T>(req(j, key));
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

void expect_type(const json& j, const char* type) {
  const auto t = req_as<std::string>(j, "type");
  if (t != type) throw FormatError("expected a " + std::string(type) + " file, found '" + t + "'");
  const int version = req_as<int>(j, "version");
  if (version != kFormatVersion) throw FormatError("unsupported " + std::string(type) + " version " + std::to_string(version));
}

// Config sections: absent keys keep defaults, unknown keys are errors.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(where_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = checked_get<T>(*it);
    } catch (const json::exception& e) {
      throw FormatError(where_ + "." + key + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(where_ + "." + key + ": " + e.what());
    }
  }

  void get_vec(const char* key, Vec3& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) out = to_vec3(*it, where_ + "." + key);
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw FormatError("unknown key " + where_ + "." + item.key());
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("write failed for " + path.string());
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  return is;
}

std::vector<fs::path> files_matching(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind(prefix, 0) == 0 && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string trial_name(const std::string& prefix, std::size_t i, const std::string& ext) {
  std::ostringstream ss;
  ss << prefix;
  ss.width(3);
  ss.fill('0');
  ss << i << ext;
  return ss.str();
}

json matrix_payload(const Eigen::MatrixX3d& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < 3; ++c) flat.push_back(m(r, c));
  return encode_f64(flat);
}

Eigen::MatrixX3d matrix_from_payload(const json& j, std::size_t rows) {
  const std::vector<double> flat = decode_f64(j.get<std::string>());
  if (flat.size() != rows * 3) throw FormatError("payload holds " + std::to_string(flat.size()) + " values, expected " + std::to_string(rows * 3));
  Eigen::MatrixX3d m(static_cast<Eigen::Index>(rows), 3);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < 3; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * 3 + c];
  return m;
}

json trajectory_json(const Trajectory& tr) {
  json samples = json::array();
  for (const auto& s : tr.samples) samples.push_back({{"t", s.t}, {"p", vec(s.p)}, {"q", quat(s.q)}, {"grip", s.grip}});
  return {{"arm", arm_name(tr.arm)}, {"samples", std::move(samples)}};
}

Trajectory trajectory_from(const json& j) {
  Trajectory tr;
  tr.arm = parse_arm(req_as<std::string>(j, "arm"));
  for (const auto& s : req(j, "samples"))
    tr.samples.push_back({req_as<double>(s, "t"), to_vec3(req(s, "p"), "p"), to_quat(req(s, "q"), "q"), req_as<bool>(s, "grip")});
  return tr;
}

json arms2(const std::array<Vec3, 2>& a) { return json::array({vec(a[0]), vec(a[1])}); }

std::array<Vec3, 2> arms2_from(const json& j, const char* key) {
  const json& v = req(j, key);
  if (!v.is_array() || v.size() != 2) throw FormatError(std::string(key) + " must hold two vectors");
  return {to_vec3(v[0], key), to_vec3(v[1], key)};
}

ControlMode parse_control_mode(const std::string& s) {
  for (ControlMode m : {ControlMode::Manual, ControlMode::Autonomous, ControlMode::AdaptiveShared})
    if (mode_name(m) == s) return m;
  throw FormatError("unknown control mode '" + s + "'");
}

}  // namespace

DmpParams DmpSettings::params() const { return make_dmp_params(kernels, 1.0, alpha_z, beta_z, alpha_x); }

void PipelineConfig::validate() const {
  episode.sim.validate();
  episode.blend.validate();
  agent.validate();
  train.validate();
  dmp.params().validate();
  if (episode.frame_period == 0) throw InvalidArgument("episode.frame_period must be positive");
  if (!(episode.dmp_dt > 0.0)) throw InvalidArgument("episode.dmp_dt must be positive");
  if (gpr.grid_n < 3) throw InvalidArgument("gpr.grid_n must be at least 3");
  if (demos == 0 || target_demos == 0 || episodes == 0) throw InvalidArgument("counts must be positive");
  if (demo.sample_every == 0 || demo.frame_every == 0 || demo.frame_every_bimanual == 0)
    throw InvalidArgument("demo sampling periods must be positive");
  if (!(dmp.still_tol >= 0.0)) throw InvalidArgument("dmp.still_tol must be non-negative");
}

json config_to_json(const PipelineConfig& c) {
  const SimConfig& s = c.episode.sim;
  const BlendConfig& b = c.episode.blend;
  json j;
  j["paths"] = {{"data_dir", c.data_dir}, {"target_dir", c.target_dir}, {"model_dir", c.model_dir},
                {"results_dir", c.results_dir}};
  j["sim"] = {{"sites", json::array({vec(s.sites[0]), vec(s.sites[1]), vec(s.sites[2])})},
              {"home_left", vec(s.home_left)},
              {"home_right", vec(s.home_right)},
              {"handoff", vec(s.handoff)},
              {"grasp_radius", s.grasp_radius},
              {"place_radius", s.place_radius},
              {"dt", s.dt},
              {"tool_v_max", s.tool_v_max},
              {"timeout", s.timeout},
              {"image_size", s.image_size},
              {"view_half_extent", s.view_half_extent},
              {"board_plane_height", s.board_plane_height}};
  j["blend"] = {{"tau", b.tau}, {"lambda", b.lambda}, {"v_max", b.v_max}};
  j["episode"] = {{"frame_period", c.episode.frame_period}, {"dmp_dt", c.episode.dmp_dt}, {"count", c.episodes}};
  j["perception"] = {{"per_site", c.episode.keypoints.per_site},  {"noise_px", c.episode.keypoints.noise_px},
                     {"clutter", c.episode.keypoints.clutter},    {"gmm_max_iter", c.episode.gmm.max_iter},
                     {"gmm_tol", c.episode.gmm.tol},              {"gmm_cov_floor", c.episode.gmm.cov_floor},
                     {"gmm_restarts", c.episode.gmm.restarts}};
  j["agent"] = {{"gain", c.agent.gain},
                {"noise", c.agent.noise},
                {"reaction_delay", c.agent.reaction_delay},
                {"workspace_half_width", c.agent.workspace_half_width},
                {"clutch_time", c.agent.clutch_time},
                {"v_max", c.agent.v_max},
                {"seed", c.agent.seed}};
  j["train"] = {{"lr", c.train.lr},       {"batch", c.train.batch}, {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience}, {"split", c.train.split}, {"freeze", c.freeze}};
  j["dmp"] = {{"kernels", c.dmp.kernels}, {"alpha_z", c.dmp.alpha_z}, {"beta_z", c.dmp.beta_z},
              {"alpha_x", c.dmp.alpha_x}, {"still_tol", c.dmp.still_tol}};
  j["gpr"] = {{"grid_n", c.gpr.grid_n}, {"points_per_demo", c.gpr.points_per_demo},
              {"max_hyper_points", c.gpr.max_hyper_points}};
  j["demo"] = {{"count", c.demos},
               {"target_count", c.target_demos},
               {"sample_every", c.demo.sample_every},
               {"frame_every", c.demo.frame_every},
               {"frame_every_bimanual", c.demo.frame_every_bimanual},
               {"jitter_shift", c.demo.jitter_shift},
               {"jitter_angle", c.demo.jitter_angle}};
  j["seeds"] = {{"demo", c.seeds.demo},   {"target_demo", c.seeds.target_demo}, {"classifier", c.seeds.classifier},
                {"train", c.seeds.train}, {"finetune", c.seeds.finetune},       {"episode", c.seeds.episode}};
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "config");
  if (const json* p = root.sub("paths")) {
    Section s(*p, "paths");
    s.get("data_dir", c.data_dir);
    s.get("target_dir", c.target_dir);
    s.get("model_dir", c.model_dir);
    s.get("results_dir", c.results_dir);
    s.finish();
  }
  if (const json* p = root.sub("sim")) {
    Section s(*p, "sim");
    SimConfig& sim = c.episode.sim;
    if (const json* sites = s.sub("sites")) {
      if (!sites->is_array() || sites->size() != 3) throw FormatError("sim.sites must hold three vectors");
      for (std::size_t i = 0; i < 3; ++i) sim.sites[i] = to_vec3((*sites)[i], "sim.sites");
    }
    s.get_vec("home_left", sim.home_left);
    s.get_vec("home_right", sim.home_right);
    s.get_vec("handoff", sim.handoff);
    s.get("grasp_radius", sim.grasp_radius);
    s.get("place_radius", sim.place_radius);
    s.get("dt", sim.dt);
    s.get("tool_v_max", sim.tool_v_max);
    s.get("timeout", sim.timeout);
    s.get("image_size", sim.image_size);
    s.get("view_half_extent", sim.view_half_extent);
    s.get("board_plane_height", sim.board_plane_height);
    s.finish();
  }
  if (const json* p = root.sub("blend")) {
    Section s(*p, "blend");
    s.get("tau", c.episode.blend.tau);
    s.get("lambda", c.episode.blend.lambda);
    s.get("v_max", c.episode.blend.v_max);
    s.finish();
  }
  if (const json* p = root.sub("episode")) {
    Section s(*p, "episode");
    s.get("frame_period", c.episode.frame_period);
    s.get("dmp_dt", c.episode.dmp_dt);
    s.get("count", c.episodes);
    s.finish();
  }
  if (const json* p = root.sub("perception")) {
    Section s(*p, "perception");
    s.get("per_site", c.episode.keypoints.per_site);
    s.get("noise_px", c.episode.keypoints.noise_px);
    s.get("clutter", c.episode.keypoints.clutter);
    s.get("gmm_max_iter", c.episode.gmm.max_iter);
    s.get("gmm_tol", c.episode.gmm.tol);
    s.get("gmm_cov_floor", c.episode.gmm.cov_floor);
    s.get("gmm_restarts", c.episode.gmm.restarts);
    s.finish();
  }
  if (const json* p = root.sub("agent")) {
    Section s(*p, "agent");
    s.get("gain", c.agent.gain);
    s.get("noise", c.agent.noise);
    s.get("reaction_delay", c.agent.reaction_delay);
    s.get("workspace_half_width", c.agent.workspace_half_width);
    s.get("clutch_time", c.agent.clutch_time);
    s.get("v_max", c.agent.v_max);
    s.get("seed", c.agent.seed);
    s.finish();
  }
  if (const json* p = root.sub("train")) {
    Section s(*p, "train");
    s.get("lr", c.train.lr);
    s.get("batch", c.train.batch);
    s.get("max_epochs", c.train.max_epochs);
    s.get("patience", c.train.patience);
    s.get("split", c.train.split);
    s.get("freeze", c.freeze);
    s.finish();
  }
  if (const json* p = root.sub("dmp")) {
    Section s(*p, "dmp");
    s.get("kernels", c.dmp.kernels);
    s.get("alpha_z", c.dmp.alpha_z);
    s.get("beta_z", c.dmp.beta_z);
    s.get("alpha_x", c.dmp.alpha_x);
    s.get("still_tol", c.dmp.still_tol);
    s.finish();
  }
  if (const json* p = root.sub("gpr")) {
    Section s(*p, "gpr");
    s.get("grid_n", c.gpr.grid_n);
    s.get("points_per_demo", c.gpr.points_per_demo);
    s.get("max_hyper_points", c.gpr.max_hyper_points);
    s.finish();
  }
  if (const json* p = root.sub("demo")) {
    Section s(*p, "demo");
    s.get("count", c.demos);
    s.get("target_count", c.target_demos);
    s.get("sample_every", c.demo.sample_every);
    s.get("frame_every", c.demo.frame_every);
    s.get("frame_every_bimanual", c.demo.frame_every_bimanual);
    s.get("jitter_shift", c.demo.jitter_shift);
    s.get("jitter_angle", c.demo.jitter_angle);
    s.finish();
  }
  if (const json* p = root.sub("seeds")) {
    Section s(*p, "seeds");
    s.get("demo", c.seeds.demo);
    s.get("target_demo", c.seeds.target_demo);
    s.get("classifier", c.seeds.classifier);
    s.get("train", c.seeds.train);
    s.get("finetune", c.seeds.finetune);
    s.get("episode", c.seeds.episode);
    s.finish();
  }
  root.finish();
  c.train.seed = c.seeds.train;
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) { return config_from_json(read_json_file(path)); }

void save_config(const fs::path& path, const PipelineConfig& cfg) { write_json_file(path, config_to_json(cfg)); }

std::string encode_f64(std::span<const double> values) {
  using namespace boost::archive::iterators;
  using Encoder = base64_from_binary<transform_width<const unsigned char*, 6, 8>>;
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t u;
    std::memcpy(&u, &values[i], 8);
    for (std::size_t b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
  }
  std::string out(Encoder(bytes.data()), Encoder(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<double> decode_f64(const std::string& text) {
  using namespace boost::archive::iterators;
  using Decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::size_t len = text.size();
  while (len > 0 && text[len - 1] == '=') --len;
  if (text.size() % 4 != 0 || text.size() - len > 2) throw FormatError("malformed base64 payload");
  std::string bytes;
  try {
    bytes.assign(Decoder(text.begin()), Decoder(text.begin() + static_cast<std::ptrdiff_t>(len)));
  } catch (const std::exception&) {
    throw FormatError("malformed base64 payload");
  }
  bytes.resize(len * 6 / 8);
  if (bytes.size() % 8 != 0) throw FormatError("base64 payload is not a float64 block");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (std::size_t b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    std::memcpy(&out[i], &u, 8);
  }
  return out;
}

void write_demo(std::ostream& os, const Trajectory& left, const Trajectory& right) {
  if (left.arm != Arm::Left || right.arm != Arm::Right) throw InvalidArgument("demo arms must be left and right");
  if (left.size() != right.size()) throw SizeMismatchError("left and right demos differ in length");
  for (std::size_t k = 0; k < left.size(); ++k) {
    const auto& l = left.samples[k];
    const auto& r = right.samples[k];
    if (l.t != r.t) throw InvalidArgument("left and right timestamps differ");
    const json line = {{"t", l.t},
                       {"left", {{"p", vec(l.p)}, {"q", quat(l.q)}, {"grip", l.grip}}},
                       {"right", {{"p", vec(r.p)}, {"q", quat(r.q)}, {"grip", r.grip}}}};
    os << line.dump() << '\n';
  }
}

std::pair<Trajectory, Trajectory> read_demo(std::istream& is) {
  Trajectory left, right;
  left.arm = Arm::Left;
  right.arm = Arm::Right;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const double t = req_as<double>(j, "t");
      for (auto* side : {&left, &right}) {
        const json& a = req(j, side == &left ? "left" : "right");
        side->samples.push_back({t, to_vec3(req(a, "p"), "p"), to_quat(req(a, "q"), "q"), req_as<bool>(a, "grip")});
      }
    } catch (const json::exception& e) {
      throw FormatError("demo line " + std::to_string(n) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("demo line " + std::to_string(n) + ": " + e.what());
    }
  }
  try {
    left.validate();
    right.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid demo: ") + e.what());
  }
  return {std::move(left), std::move(right)};
}

void save_demo(const fs::path& path, const Trajectory& left, const Trajectory& right) {
  std::ostringstream ss;
  write_demo(ss, left, right);
  write_text(path, ss.str());
}

std::pair<Trajectory, Trajectory> load_demo(const fs::path& path) {
  auto is = open_in(path);
  return read_demo(is);
}

void write_frames(std::ostream& os, std::span<const Image> images) {
  const int w = images.empty() ? 0 : images.front().width;
  const int h = images.empty() ? 0 : images.front().height;
  const json header = {{"type", "frames"}, {"version", kFormatVersion}, {"count", images.size()},
                       {"width", w},       {"height", h},                {"dtype", "u8"}};
  const std::string text = header.dump();
  os.write(kFrameMagic, sizeof kFrameMagic);
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int b = 0; b < 4; ++b) os.put(static_cast<char>((len >> (8 * b)) & 0xFF));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<char> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (const Image& img : images) {
    if (img.width != w || img.height != h) throw SizeMismatchError("frames differ in size");
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double v = std::clamp(static_cast<double>(img.data[i]), 0.0, 1.0);
      buf[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw Error("frame write failed");
}

std::vector<Image> read_frames(std::istream& is) {
  char magic[sizeof kFrameMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kFrameMagic, sizeof magic) != 0)
    throw FormatError("not a frame file");
  unsigned char lb[4];
  if (!is.read(reinterpret_cast<char*>(lb), 4)) throw FormatError("truncated frame header");
  const std::uint32_t len = lb[0] | (lb[1] << 8) | (lb[2] << 16) | (static_cast<std::uint32_t>(lb[3]) << 24);
  if (len > (1u << 20)) throw FormatError("frame header too long");
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw FormatError("truncated frame header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("frame header: ") + e.what());
  }
  expect_type(header, "frames");
  if (req_as<std::string>(header, "dtype") != "u8") throw FormatError("unsupported frame dtype");
  const auto count = req_as<std::size_t>(header, "count");
  const int w = req_as<int>(header, "width");
  const int h = req_as<int>(header, "height");
  if (w < 0 || h < 0 || (count > 0 && (w == 0 || h == 0))) throw FormatError("bad frame size");
  std::vector<Image> out;
  out.reserve(count);
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t k = 0; k < count; ++k) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
      throw FormatError("truncated frame data");
    Image img(w, h);
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = static_cast<float>(static_cast<double>(buf[i]) / 255.0);
    out.push_back(std::move(img));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after frame data");
  return out;
}

void save_frames(const fs::path& path, std::span<const Image> images) {
  std::ostringstream ss;
  write_frames(ss, images);
  write_text(path, ss.str());
}

std::vector<Image> load_frames(const fs::path& path) {
  auto is = open_in(path);
  return read_frames(is);
}

void save_labels(const fs::path& path, std::span<const int> labels) {
  std::array<std::size_t, 3> hist{0, 0, 0};
  for (int l : labels) {
    if (l < 0 || l > 2) throw InvalidArgument("context labels are 0, 1 or 2");
    ++hist[static_cast<std::size_t>(l)];
  }
  write_json_file(path, {{"type", "labels"},
                         {"version", kFormatVersion},
                         {"labels", std::vector<int>(labels.begin(), labels.end())},
                         {"histogram", hist}});
}

std::vector<int> load_labels(const fs::path& path) {
  const json j = read_json_file(path);
  expect_type(j, "labels");
  auto labels = req_as<std::vector<int>>(j, "labels");
  for (int l : labels)
    if (l < 0 || l > 2) throw FormatError("context label out of range in " + path.string());
  return labels;
}

void save_trials(const fs::path& dir, std::span<const DemoTrial> trials) {
  for (std::size_t i = 0; i < trials.size(); ++i) {
    save_demo(dir / trial_name("demo_", i, ".jsonl"), trials[i].left, trials[i].right);
    save_frames(dir / trial_name("frames_", i, ".bin"), trials[i].frames.images);
    save_labels(dir / trial_name("labels_", i, ".json"), trials[i].frames.labels);
  }
}

std::vector<std::pair<Trajectory, Trajectory>> load_demos(const fs::path& dir) {
  std::vector<std::pair<Trajectory, Trajectory>> out;
  for (const auto& p : files_matching(dir, "demo_", ".jsonl")) out.push_back(load_demo(p));
  if (out.empty()) throw InsufficientDataError("no demo files in " + dir.string());
  return out;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset data;
  for (const auto& p : files_matching(dir, "frames_", ".bin")) {
    std::string stem = p.filename().string();
    const fs::path lp = p.parent_path() / ("labels_" + stem.substr(7, stem.size() - 7 - 4) + ".json");
    auto images = load_frames(p);
    auto labels = load_labels(lp);
    if (images.size() != labels.size()) throw FormatError("frame and label counts differ for " + p.string());
    for (auto& img : images) data.images.push_back(std::move(img));
    data.labels.insert(data.labels.end(), labels.begin(), labels.end());
  }
  if (data.size() == 0) throw InsufficientDataError("no frames in " + dir.string());
  return data;
}

json registered_to_json(std::span<const RegisteredDemoSet> sets) {
  json arms = json::array();
  for (const auto& s : sets) {
    json demos = json::array();
    for (const auto& d : s.demos) demos.push_back(trajectory_json(d));
    json transforms = json::array();
    for (const auto& t : s.transforms) {
      std::vector<double> r(t.R.data(), t.R.data() + 9);  // column-major
      transforms.push_back({{"R", r}, {"t", vec(t.t)}});
    }
    arms.push_back({{"arm", arm_name(s.arm)},
                    {"reference_index", s.reference_index},
                    {"warp_costs", s.warp_costs},
                    {"transforms", std::move(transforms)},
                    {"demos", std::move(demos)}});
  }
  return {{"type", "registered_demos"}, {"version", kFormatVersion}, {"arms", std::move(arms)}};
}

std::vector<RegisteredDemoSet> registered_from_json(const json& j) {
  expect_type(j, "registered_demos");
  std::vector<RegisteredDemoSet> out;
  try {
    for (const auto& a : req(j, "arms")) {
      RegisteredDemoSet s;
      s.arm = parse_arm(req_as<std::string>(a, "arm"));
      s.reference_index = req_as<std::size_t>(a, "reference_index");
      s.warp_costs = req_as<std::vector<double>>(a, "warp_costs");
      for (const auto& t : req(a, "transforms")) {
        RigidTransform rt;
        const auto r = req_as<std::vector<double>>(t, "R");
        if (r.size() != 9) throw FormatError("rotation must hold 9 values");
        std::copy(r.begin(), r.end(), rt.R.data());
        rt.t = to_vec3(req(t, "t"), "t");
        s.transforms.push_back(rt);
      }
      for (const auto& d : req(a, "demos")) s.demos.push_back(trajectory_from(d));
      if (s.demos.empty() || s.reference_index >= s.demos.size() || s.transforms.size() != s.demos.size() ||
          s.warp_costs.size() != s.demos.size())
        throw FormatError("inconsistent registered demo set");
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("registered demos: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("registered demos: ") + e.what());
  }
  return out;
}

json desired_to_json(const DesiredTrajectory& d) {
  json arms = json::array();
  for (const auto& a : d.arms) {
    json hyper = json::array();
    for (const auto& h : a.hyper)
      hyper.push_back({{"lengthscale", h.lengthscale}, {"signal_var", h.signal_var}, {"noise_var", h.noise_var}});
    arms.push_back({{"arm", arm_name(a.arm)},
                    {"duration", a.duration},
                    {"offset", vec(a.offset)},
                    {"hyper", std::move(hyper)},
                    {"mean", matrix_payload(a.mean)},
                    {"variance", matrix_payload(a.variance)}});
  }
  return {{"type", "desired_trajectory"}, {"version", kFormatVersion}, {"dtype", "f64"},
          {"grid_n", d.grid.size()},      {"grid", encode_f64(d.grid)},  {"arms", std::move(arms)}};
}

DesiredTrajectory desired_from_json(const json& j) {
  expect_type(j, "desired_trajectory");
  DesiredTrajectory d;
  try {
    const auto n = req_as<std::size_t>(j, "grid_n");
    d.grid = decode_f64(req_as<std::string>(j, "grid"));
    if (d.grid.size() != n) throw FormatError("grid length mismatch");
    for (const auto& a : req(j, "arms")) {
      ArmDesiredTrajectory arm;
      arm.arm = parse_arm(req_as<std::string>(a, "arm"));
      arm.duration = req_as<double>(a, "duration");
      arm.offset = to_vec3(req(a, "offset"), "offset");
      const json& hyper = req(a, "hyper");
      if (!hyper.is_array() || hyper.size() != 3) throw FormatError("hyper must hold three entries");
      for (std::size_t k = 0; k < 3; ++k)
        arm.hyper[k] = {req_as<double>(hyper[k], "lengthscale"), req_as<double>(hyper[k], "signal_var"),
                        req_as<double>(hyper[k], "noise_var")};
      arm.mean = matrix_from_payload(req(a, "mean"), n);
      arm.variance = matrix_from_payload(req(a, "variance"), n);
      d.arms.push_back(std::move(arm));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("desired trajectory: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("desired trajectory: ") + e.what());
  }
  return d;
}

json dmps_to_json(const std::map<TaskPhase, DmpModel>& dmps) {
  json list = json::array();
  for (const auto& [phase, m] : dmps) {
    list.push_back({{"phase", phase_name(phase)},
                    {"arm", arm_name(m.arm)},
                    {"alpha_z", m.params.alpha_z},
                    {"beta_z", m.params.beta_z},
                    {"alpha_x", m.params.alpha_x},
                    {"gamma", m.params.gamma},
                    {"kernels", m.params.kernel_count()},
                    {"centers", encode_f64(m.params.centers)},
                    {"widths", encode_f64(m.params.widths)},
                    {"weights", matrix_payload(m.weights)},
                    {"x0", vec(m.x0)},
                    {"g", vec(m.g)},
                    {"degenerate", m.degenerate}});
  }
  return {{"type", "dmp_set"}, {"version", kFormatVersion}, {"dtype", "f64"}, {"phases", std::move(list)}};
}

std::map<TaskPhase, DmpModel> dmps_from_json(const json& j) {
  expect_type(j, "dmp_set");
  std::map<TaskPhase, DmpModel> out;
  try {
    for (const auto& e : req(j, "phases")) {
      const TaskPhase phase = parse_phase(req_as<std::string>(e, "phase"));
      DmpModel m;
      m.arm = parse_arm(req_as<std::string>(e, "arm"));
      m.params.alpha_z = req_as<double>(e, "alpha_z");
      m.params.beta_z = req_as<double>(e, "beta_z");
      m.params.alpha_x = req_as<double>(e, "alpha_x");
      m.params.gamma = req_as<double>(e, "gamma");
      const auto n = req_as<std::size_t>(e, "kernels");
      m.params.centers = decode_f64(req_as<std::string>(e, "centers"));
      m.params.widths = decode_f64(req_as<std::string>(e, "widths"));
      if (m.params.centers.size() != n || m.params.widths.size() != n) throw FormatError("kernel count mismatch");
      m.params.validate();
      m.weights = matrix_from_payload(req(e, "weights"), n);
      m.x0 = to_vec3(req(e, "x0"), "x0");
      m.g = to_vec3(req(e, "g"), "g");
      m.degenerate = req_as<std::array<bool, 3>>(e, "degenerate");
      if (!out.emplace(phase, std::move(m)).second) throw FormatError("duplicate phase in dmp set");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("dmp set: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("dmp set: ") + e.what());
  }
  return out;
}

void write_log(std::ostream& os, const EpisodeLog& log) {
  json events = json::array();
  for (const auto& e : log.events) events.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  const json header = {{"type", "episode_log"},
                       {"version", kFormatVersion},
                       {"mode", run_mode_name(log.mode)},
                       {"seed", log.seed},
                       {"dt", log.dt},
                       {"success", log.success},
                       {"perceived_sites",
                        json::array({vec(log.perceived_sites[0]), vec(log.perceived_sites[1]), vec(log.perceived_sites[2])})},
                       {"events", std::move(events)},
                       {"steps", log.steps.size()}};
  os << header.dump() << '\n';
  for (const auto& r : log.steps) {
    const json line = {{"clock", r.clock},
                       {"phase", phase_name(r.phase)},
                       {"master", arms2(r.master)},
                       {"engaged", r.engaged},
                       {"dPh", arms2(r.dPh)},
                       {"dPr", arms2(r.dPr)},
                       {"alpha", r.alpha},
                       {"framed", r.framed},
                       {"probs", r.probs},
                       {"context", r.context},
                       {"oracle", r.oracle},
                       {"mode", mode_name(r.mode)},
                       {"tool", arms2(r.tool)},
                       {"grip", r.grip},
                       {"peg", vec(r.peg)},
                       {"peg_holder", r.peg_holder},
                       {"peg_site", r.peg_site}};
    os << line.dump() << '\n';
  }
}

EpisodeLog read_log(std::istream& is) {
  EpisodeLog log;
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty episode log");
  std::size_t n = 1;
  try {
    const json h = json::parse(line);
    expect_type(h, "episode_log");
    log.mode = parse_run_mode(req_as<std::string>(h, "mode"));
    log.seed = req_as<std::uint64_t>(h, "seed");
    log.dt = req_as<double>(h, "dt");
    log.success = req_as<bool>(h, "success");
    const json& sites = req(h, "perceived_sites");
    if (!sites.is_array() || sites.size() != 3) throw FormatError("perceived_sites must hold three vectors");
    for (std::size_t i = 0; i < 3; ++i) log.perceived_sites[i] = to_vec3(sites[i], "perceived_sites");
    for (const auto& e : req(h, "events"))
      log.events.push_back({req_as<double>(e, "t"), req_as<std::string>(e, "kind"), req_as<std::string>(e, "detail")});
    const auto count = req_as<std::size_t>(h, "steps");
    while (std::getline(is, line)) {
      ++n;
      if (line.empty()) continue;
      const json j = json::parse(line);
      StepRecord r;
      r.clock = req_as<double>(j, "clock");
      r.phase = parse_phase(req_as<std::string>(j, "phase"));
      r.master = arms2_from(j, "master");
      r.engaged = req_as<std::array<bool, 2>>(j, "engaged");
      r.dPh = arms2_from(j, "dPh");
      r.dPr = arms2_from(j, "dPr");
      r.alpha = req_as<double>(j, "alpha");
      r.framed = req_as<bool>(j, "framed");
      r.probs = req_as<ContextProbs>(j, "probs");
      r.context = req_as<int>(j, "context");
      r.oracle = req_as<int>(j, "oracle");
      r.mode = parse_control_mode(req_as<std::string>(j, "mode"));
      r.tool = arms2_from(j, "tool");
      r.grip = req_as<std::array<bool, 2>>(j, "grip");
      r.peg = to_vec3(req(j, "peg"), "peg");
      r.peg_holder = req_as<int>(j, "peg_holder");
      r.peg_site = req_as<int>(j, "peg_site");
      if (!log.steps.empty() && !(r.clock > log.steps.back().clock))
        throw FormatError("step timestamps must increase");
      log.steps.push_back(r);
    }
    if (log.steps.size() != count) throw FormatError("step count does not match header");
  } catch (const json::exception& e) {
    throw FormatError("episode log line " + std::to_string(n) + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError("episode log line " + std::to_string(n) + ": " + e.what());
  }
  return log;
}

void save_log(const fs::path& path, const EpisodeLog& log) {
  std::ostringstream ss;
  write_log(ss, log);
  write_text(path, ss.str());
}

EpisodeLog load_log(const fs::path& path) {
  auto is = open_in(path);
  return read_log(is);
}

json metrics_to_json(const MetricsFile& m) {
  json runs = json::array();
  for (const auto& r : m.runs)
    runs.push_back({{"seed", r.seed},
                    {"success", r.success},
                    {"M", r.metrics.M},
                    {"T", r.metrics.T},
                    {"A", r.metrics.A},
                    {"C", r.metrics.C}});
  return {{"type", "metrics"}, {"version", kFormatVersion}, {"mode", m.mode}, {"runs", std::move(runs)}};
}

MetricsFile metrics_from_json(const json& j) {
  expect_type(j, "metrics");
  MetricsFile m;
  m.mode = req_as<std::string>(j, "mode");
  for (const auto& r : req(j, "runs")) {
    MetricsRun run;
    run.seed = req_as<std::uint64_t>(r, "seed");
    run.success = req_as<bool>(r, "success");
    run.metrics.M = req_as<double>(r, "M");
    run.metrics.T = req_as<double>(r, "T");
    run.metrics.A = req_as<double>(r, "A");
    run.metrics.C = req_as<std::size_t>(r, "C");
    m.runs.push_back(run);
  }
  return m;
}

json read_json_file(const fs::path& path) {
  auto is = open_in(path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace lfd
