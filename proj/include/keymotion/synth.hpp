#pragma once

// Synthetic music/motion clip generator. Musical beats sit at multiples of
// the period P; the motion is an alternating swing whose per-frame speed
// follows eps + sin^2(pi (u-1)/P), so its kinetic-velocity minima land at
// u = kP+1, within one frame of every constructed beat, and nowhere else.
// Joint poses stay valid rotations (axis-angle about a fixed random axis per
// joint, driven by the shared swing curve).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/io.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/music.hpp"
#include "keymotion/rotation.hpp"

namespace keymotion {

struct SynthSpec {
  std::size_t frames = 240;      // T
  std::size_t period = 30;       // P, beat spacing in frames
  std::size_t clips = 2;
  std::size_t test_clips = 0;    // trailing clips marked split=test
  double fps = 30.0;
  double amplitude = 0.6;        // peak joint swing, radians
  std::uint64_t seed = 1;

  void validate() const {
    if (period < 2) throw ValidationError("synth: period must be >= 2");
    if (frames < 2 * period) throw ValidationError("synth: need at least two periods of frames");
    if (clips == 0) throw ValidationError("synth: need at least one clip");
    if (test_clips > clips) throw ValidationError("synth: more test clips than clips");
    if (fps <= 0.0 || amplitude <= 0.0) throw ValidationError("synth: fps and amplitude must be positive");
  }
};

struct SynthClip {
  MusicFeatureSequence music;
  MotionSequence motion;
  std::vector<std::size_t> beat_frames;
};

namespace synth_detail {

// Swing curve: integral of the speed profile with direction flips at the
// speed minima, normalized to [-1, 1].
inline std::vector<double> swing_curve(std::size_t frames, std::size_t period, double phase_offset) {
  constexpr double kFloorSpeed = 0.15;
  double t0 = 1.0 + phase_offset;
  auto speed = [&](std::size_t u) {
    double s = std::sin(std::numbers::pi * (static_cast<double>(u) - t0) / static_cast<double>(period));
    return kFloorSpeed + s * s;
  };
  std::vector<double> c(frames, 0.0);
  for (std::size_t u = 0; u + 1 < frames; ++u) {
    double k = std::floor((static_cast<double>(u) - t0) / static_cast<double>(period));
    double dir = (static_cast<long long>(k) % 2 == 0) ? 1.0 : -1.0;
    c[u + 1] = c[u] + dir * speed(u);
  }
  double peak = 0.0;
  for (double v : c) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : c) v /= peak;
  return c;
}

}  // namespace synth_detail

inline std::vector<std::size_t> synth_beat_frames(const SynthSpec& spec) {
  std::vector<std::size_t> beats;
  for (std::size_t b = 0; b < spec.frames; b += spec.period) beats.push_back(b);
  return beats;
}

inline SynthClip make_synth_clip(const SynthSpec& spec, std::size_t clip_index, double phase_offset = 0.0) {
  spec.validate();
  std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ull + clip_index + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthClip clip;
  clip.beat_frames = synth_beat_frames(spec);

  // music: chroma random walk, beat/downbeat flags, gaussian onset bumps
  clip.music = MusicFeatureSequence(spec.frames, spec.fps);
  std::array<double, kChromaDim> chroma{};
  for (auto& v : chroma) v = unit(rng);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    auto f = clip.music.frame(t);
    for (std::size_t c = 0; c < kChromaDim; ++c) {
      chroma[c] = std::clamp(chroma[c] + 0.03 * gauss(rng), 0.0, 1.0);
      f[c] = chroma[c];
    }
    if (t % spec.period == 0) {
      f[kBeatFlagColumn] = 1.0;
      if ((t / spec.period) % 4 == 0) f[kBeatFlagColumn + 1] = 1.0;
    }
    double onset = 0.0;
    for (std::size_t b : clip.beat_frames) {
      double d = static_cast<double>(t) - static_cast<double>(b);
      onset += std::exp(-d * d / (2.0 * 1.5 * 1.5));
    }
    f[kMusicDim - 1] = onset;
  }

  // motion: per joint, base rotation swung about a fixed axis by the shared curve
  std::vector<double> curve = synth_detail::swing_curve(spec.frames, spec.period, phase_offset);
  std::vector<Mat3> base(kJointCount);
  std::vector<Vec3> axes(kJointCount);
  std::vector<double> amps(kJointCount);
  for (std::size_t j = 0; j < kJointCount; ++j) {
    base[j] = random_rotation(rng);
    Vec3 axis{gauss(rng), gauss(rng), gauss(rng)};
    while (norm3(axis) < 1e-6) axis = {gauss(rng), gauss(rng), gauss(rng)};
    axes[j] = axis;
    amps[j] = spec.amplitude * (0.4 + 0.6 * unit(rng));
  }

  clip.motion = MotionSequence(spec.frames, spec.fps);
  double tx = 0.0, tz = 0.0, vx = 0.0, vz = 0.0;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    auto pose = clip.motion.pose(t);
    for (std::size_t j = 0; j < kJointCount; ++j) {
      Mat3 r = matmul3(base[j], axis_angle(axes[j], amps[j] * curve[t]));
      SixD sixd = rotmat_to_6d(r);
      for (std::size_t c = 0; c < 6; ++c) pose[j * 6 + c] = sixd[c];
    }
    // slow smoothed 2-D drift of the root
    vx = 0.95 * vx + 0.0004 * gauss(rng);
    vz = 0.95 * vz + 0.0004 * gauss(rng);
    tx += vx;
    tz += vz;
    auto trans = clip.motion.translation(t);
    trans[0] = tx;
    trans[1] = 0.9;
    trans[2] = tz;
  }
  return clip;
}

// Writes clip files plus manifest.json into out_dir.
inline DatasetManifest synth_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  for (std::size_t i = 0; i < spec.clips; ++i) {
    SynthClip clip = make_synth_clip(spec, i);
    char tag[32];
    std::snprintf(tag, sizeof(tag), "clip_%03zu", i);
    ManifestSample sample;
    sample.music_file = std::string(tag) + ".music.mdrt";
    sample.motion_file = std::string(tag) + ".motion.mdrt";
    sample.fps = spec.fps;
    sample.beat_frames = clip.beat_frames;
    sample.split = (i + spec.test_clips >= spec.clips) ? "test" : "train";
    save_music(out_dir / sample.music_file, clip.music, clip.beat_frames);
    save_motion(out_dir / sample.motion_file, clip.motion, tag);
    manifest.samples.push_back(std::move(sample));
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

inline TrainSample clip_to_sample(SynthClip clip) {
  TrainSample s;
  s.music = std::move(clip.music);
  s.motion = std::move(clip.motion);
  s.beat_frames = std::move(clip.beat_frames);
  return s;
}

}  // namespace keymotion
