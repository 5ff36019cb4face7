#pragma once

// On-disk formats. Bulk tensors use a small binary container, everything
// human-readable is JSON.
//
// Tensor file ("MDRT", little-endian throughout):
//   magic   4 bytes  "MDRT"
//   version u16      1
//   dtype   u8       1 = f32
//   ndim    u8
//   dims    u32 x ndim
//   payload f32 x prod(dims), row-major
//
// Checkpoint file ("MDRC"):
//   magic    4 bytes "MDRC"
//   version  u16     1
//   json_len u32, manifest JSON bytes (config, loss params, schedule, seed, step)
//   count    u32, then per tensor: name_len u16, name bytes, MDRT record
//
// Values are f64 in memory and f32 on disk; a write/read round trip is exact
// at f32 precision and byte-identical when rewritten.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "keymotion/errors.hpp"
#include "keymotion/model.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/music.hpp"
#include "keymotion/tensor.hpp"
#include "keymotion/train.hpp"

namespace keymotion {

using json = nlohmann::json;

namespace io_detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  explicit Reader(const std::string& b) : buf(b) {}

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw IoError("tensor file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;

inline void encode_tensor(std::string& out, const Tensor& t) {
  out += "MDRT";
  put_u16(out, kTensorVersion);
  out.push_back(static_cast<char>(kDtypeF32));
  if (t.ndim() > 255) throw IoError("tensor rank too large for file format");
  out.push_back(static_cast<char>(t.ndim()));
  for (std::size_t d : t.shape) {
    if (d > 0xffffffffull) throw IoError("tensor dimension too large for file format");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (double v : t.data) put_f32(out, static_cast<float>(v));
}

inline Tensor decode_tensor(Reader& r) {
  if (r.bytes(4) != "MDRT") throw IoError("bad tensor magic");
  if (r.u16() != kTensorVersion) throw IoError("unsupported tensor file version");
  if (r.u8() != kDtypeF32) throw IoError("unsupported tensor dtype");
  std::size_t ndim = r.u8();
  std::vector<std::size_t> shape(ndim);
  for (auto& d : shape) d = r.u32();
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = static_cast<double>(r.f32());
  return t;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

inline void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace io_detail

inline void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  std::string out;
  io_detail::encode_tensor(out, t);
  io_detail::spit(path, out);
}

inline Tensor read_tensor_file(const std::filesystem::path& path) {
  std::string buf = io_detail::slurp(path);
  io_detail::Reader r(buf);
  Tensor t = io_detail::decode_tensor(r);
  if (r.pos != buf.size()) throw IoError("trailing bytes in tensor file " + path.string());
  return t;
}

inline std::filesystem::path sidecar_path(std::filesystem::path p) { return p.replace_extension(".json"); }

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// --- motion / music files: [T x 147] and [T x 15] tensors + JSON sidecar ---

inline void save_motion(const std::filesystem::path& path, const MotionSequence& motion,
                        const std::string& name) {
  write_tensor_file(path, motion.to_matrix());
  write_json_file(sidecar_path(path), json{{"fps", motion.fps()}, {"name", name}});
}

inline MotionSequence load_motion(const std::filesystem::path& path) {
  Tensor m = read_tensor_file(path);
  double fps = kDefaultFps;
  auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) fps = read_json_file(side).value("fps", kDefaultFps);
  return MotionSequence::from_matrix(m, fps);
}

inline void save_music(const std::filesystem::path& path, const MusicFeatureSequence& music,
                       const std::vector<std::size_t>& beat_frames) {
  write_tensor_file(path, music.to_matrix());
  write_json_file(sidecar_path(path), json{{"fps", music.fps()}, {"beat_frames", beat_frames}});
}

struct LoadedMusic {
  MusicFeatureSequence features;
  std::vector<std::size_t> beat_frames;
};

inline LoadedMusic load_music(const std::filesystem::path& path) {
  Tensor m = read_tensor_file(path);
  double fps = kDefaultFps;
  std::vector<std::size_t> beats;
  auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    json j = read_json_file(side);
    fps = j.value("fps", kDefaultFps);
    if (j.contains("beat_frames")) beats = j["beat_frames"].get<std::vector<std::size_t>>();
  }
  LoadedMusic out{MusicFeatureSequence::from_matrix(m, fps), std::move(beats)};
  if (out.beat_frames.empty()) out.beat_frames = musical_beats(out.features).frames;
  return out;
}

// --- dataset manifest ---

struct ManifestSample {
  std::string music_file;
  std::string motion_file;
  double fps = kDefaultFps;
  std::vector<std::size_t> beat_frames;
  std::string split = "train";
};

struct DatasetManifest {
  std::vector<ManifestSample> samples;
};

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json samples = json::array();
  for (const auto& s : manifest.samples)
    samples.push_back(json{{"music_file", s.music_file},
                           {"motion_file", s.motion_file},
                           {"fps", s.fps},
                           {"beat_frames", s.beat_frames},
                           {"split", s.split}});
  write_json_file(path, json{{"samples", samples}});
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  json j = read_json_file(path);
  if (!j.contains("samples") || !j["samples"].is_array()) throw IoError("manifest: missing samples array");
  DatasetManifest m;
  for (const auto& s : j["samples"]) {
    ManifestSample sample;
    sample.music_file = s.at("music_file").get<std::string>();
    sample.motion_file = s.at("motion_file").get<std::string>();
    sample.fps = s.value("fps", kDefaultFps);
    if (s.contains("beat_frames")) sample.beat_frames = s["beat_frames"].get<std::vector<std::size_t>>();
    sample.split = s.value("split", "train");
    m.samples.push_back(std::move(sample));
  }
  return m;
}

struct LoadedDataset {
  std::vector<TrainSample> train;
  std::vector<TrainSample> test;
};

inline LoadedDataset load_dataset(const std::filesystem::path& manifest_path) {
  DatasetManifest manifest = read_manifest(manifest_path);
  std::filesystem::path base = manifest_path.parent_path();
  LoadedDataset out;
  for (const auto& s : manifest.samples) {
    TrainSample sample;
    LoadedMusic music = load_music(base / s.music_file);
    sample.music = std::move(music.features);
    sample.motion = load_motion(base / s.motion_file);
    sample.beat_frames = s.beat_frames.empty() ? music.beat_frames : s.beat_frames;
    if (sample.music.frames() != sample.motion.frames())
      throw ValidationError("dataset sample has mismatched music/motion lengths");
    (s.split == "test" ? out.test : out.train).push_back(std::move(sample));
  }
  return out;
}

// --- evaluation reports ---

inline json report_to_json(const EvalReport& r) {
  json j;
  j["n_keys"] = r.n_keys;
  j["n_music_beats"] = r.n_music_beats;
  j["n_motion_beats"] = r.n_motion_beats;
  if (r.consistency)
    j["consistency_error"] = *r.consistency;
  else
    j["consistency_error"] = nullptr;  // no keys
  if (r.smoothness)
    j["smoothness_cv"] = *r.smoothness;
  else
    j["smoothness_cv"] = nullptr;  // frozen motion, zero mean difference
  json rates = json::array();
  for (const auto& [delta, rate] : r.hit_rates) {
    json row{{"delta", delta}};
    if (rate)
      row["hit_rate"] = *rate;
    else
      row["hit_rate"] = nullptr;  // no musical beats
    rates.push_back(row);
  }
  j["beat_hit_rates"] = rates;
  return j;
}

// One row per delta, for plotting hit-rate sweeps.
inline std::string report_to_csv(const EvalReport& r) {
  std::string out = "delta,hit_rate\n";
  for (const auto& [delta, rate] : r.hit_rates) {
    out += std::to_string(delta);
    out += ',';
    out += rate ? std::to_string(*rate) : std::string("nan");
    out += '\n';
  }
  return out;
}

// --- checkpoints ---

inline json config_to_json(const DanceModelConfig& cfg) {
  return json{{"preset", cfg.preset},
              {"d_model", cfg.d_model},
              {"cross_layers", cfg.cross_layers},
              {"num_heads", cfg.num_heads},
              {"encoder_layers", cfg.encoder_layers},
              {"ff_mult", cfg.ff_mult},
              {"max_len", cfg.max_len},
              {"seed_len", cfg.seed_len},
              {"music_len", cfg.music_len},
              {"use_local_pe", cfg.use_local_pe},
              {"allow_seed_keys", cfg.allow_seed_keys}};
}

inline DanceModelConfig config_from_json(const json& j) {
  DanceModelConfig cfg;
  cfg.preset = j.value("preset", "tiny");
  cfg.d_model = j.at("d_model").get<std::size_t>();
  cfg.cross_layers = j.at("cross_layers").get<std::size_t>();
  cfg.num_heads = j.at("num_heads").get<std::size_t>();
  cfg.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  cfg.ff_mult = j.value("ff_mult", std::size_t{4});
  cfg.max_len = j.at("max_len").get<std::size_t>();
  cfg.seed_len = j.at("seed_len").get<std::size_t>();
  cfg.music_len = j.at("music_len").get<std::size_t>();
  cfg.use_local_pe = j.value("use_local_pe", true);
  cfg.allow_seed_keys = j.value("allow_seed_keys", false);
  cfg.validate();
  return cfg;
}

inline constexpr std::uint16_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::filesystem::path& path, DanceModel& model, const json& manifest) {
  json full = manifest;
  full["config"] = config_to_json(model.config());
  std::string payload = full.dump();

  std::string out;
  out += "MDRC";
  io_detail::put_u16(out, kCheckpointVersion);
  io_detail::put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  auto params = model.parameters();
  io_detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    if (p.name.size() > 0xffff) throw IoError("parameter name too long");
    io_detail::put_u16(out, static_cast<std::uint16_t>(p.name.size()));
    out += p.name;
    io_detail::encode_tensor(out, *p.tensor);
  }
  io_detail::spit(path, out);
}

struct Checkpoint {
  DanceModel model;
  json manifest;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string buf = io_detail::slurp(path);
  io_detail::Reader r(buf);
  if (r.bytes(4) != "MDRC") throw IoError("bad checkpoint magic");
  if (r.u16() != kCheckpointVersion) throw IoError("unsupported checkpoint version");
  std::uint32_t json_len = r.u32();
  json manifest;
  try {
    manifest = json::parse(r.bytes(json_len));
  } catch (const json::exception& e) {
    throw IoError(std::string("bad checkpoint manifest: ") + e.what());
  }
  DanceModelConfig cfg = config_from_json(manifest.at("config"));
  Checkpoint ckpt{DanceModel(cfg, manifest.value("seed", std::uint64_t{0})), manifest};

  std::uint32_t count = r.u32();
  auto params = ckpt.model.parameters();
  if (count != params.size()) throw IoError("checkpoint parameter count does not match config");
  for (auto& p : params) {
    std::uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    if (name != p.name) throw IoError("checkpoint parameter order mismatch at " + name);
    Tensor stored = io_detail::decode_tensor(r);
    if (stored.shape != p.tensor->shape) throw IoError("checkpoint shape mismatch for " + name);
    p.tensor->data = std::move(stored.data);
  }
  if (r.pos != buf.size()) throw IoError("trailing bytes in checkpoint");
  return ckpt;
}

// --- key-pose constraint files: [{"frame": n, "pose_file": p | "from_gt": true}, ...] ---

inline KeyPoseSet load_key_poses(const std::filesystem::path& keys_path, const MotionSequence* gt_motion) {
  json j = read_json_file(keys_path);
  if (!j.is_array()) throw IoError("keys file must be a JSON array");
  std::filesystem::path base = keys_path.parent_path();
  KeyPoseSet keys;
  for (const auto& entry : j) {
    KeyPose k;
    k.frame = entry.at("frame").get<std::size_t>();
    if (entry.value("from_gt", false)) {
      if (!gt_motion) throw ValidationError("keys file uses from_gt but no ground-truth motion was given");
      if (k.frame >= gt_motion->frames()) throw ValidationError("from_gt key frame outside ground truth");
      auto p = gt_motion->pose(k.frame);
      std::copy(p.begin(), p.end(), k.pose.begin());
    } else if (entry.contains("pose_file")) {
      Tensor pose = read_tensor_file(base / entry["pose_file"].get<std::string>());
      if (pose.numel() != kPoseDim) throw ValidationError("key pose file must hold 144 values");
      std::copy(pose.data.begin(), pose.data.end(), k.pose.begin());
    } else {
      throw IoError("keys entry needs pose_file or from_gt");
    }
    keys.push_back(k);
  }
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (keys[i].frame <= keys[i - 1].frame) throw ValidationError("keys file frames must be strictly increasing");
  return keys;
}

}  // namespace keymotion
