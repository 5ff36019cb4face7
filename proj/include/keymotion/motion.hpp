#pragma once

// Motion data model: 24 joints x 6-D rotation (144 values) plus a 3-D root
// translation per frame, 147 values total.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/tensor.hpp"

namespace keymotion {

inline constexpr std::size_t kJointCount = 24;
inline constexpr std::size_t kPoseDim = 144;   // 24 joints x 6
inline constexpr std::size_t kFrameDim = 147;  // pose + root translation
inline constexpr double kDefaultFps = 30.0;

using PoseVector = std::array<double, kPoseDim>;

struct KeyPose {
  std::size_t frame = 0;
  PoseVector pose{};
};

// Entries sorted by strictly increasing frame index.
using KeyPoseSet = std::vector<KeyPose>;

inline std::vector<std::size_t> key_positions(const KeyPoseSet& keys) {
  std::vector<std::size_t> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(k.frame);
  return out;
}

inline void validate_key_order(const std::vector<std::size_t>& positions) {
  for (std::size_t i = 1; i < positions.size(); ++i)
    if (positions[i] <= positions[i - 1])
      throw ValidationError("key positions must be strictly increasing");
}

class MotionSequence {
 public:
  MotionSequence() = default;

  MotionSequence(std::size_t frames, double fps) : frames_(frames), fps_(fps), data_(frames * kFrameDim, 0.0) {
    if (frames == 0) throw ValidationError("motion sequence must be nonempty");
    if (fps <= 0.0) throw ValidationError("motion fps must be positive");
  }

  static MotionSequence from_matrix(const Tensor& m, double fps) {
    if (!m.is_matrix() || m.cols() != kFrameDim)
      throw ValidationError("motion matrix must be [T x 147], got " + m.shape_str());
    if (!m.all_finite()) throw ValidationError("motion matrix contains non-finite values");
    MotionSequence seq(m.rows(), fps);
    seq.data_ = m.data;
    return seq;
  }

  Tensor to_matrix() const {
    Tensor m({frames_, kFrameDim});
    m.data = data_;
    return m;
  }

  std::size_t frames() const { return frames_; }
  double fps() const { return fps_; }
  void set_fps(double fps) {
    if (fps <= 0.0) throw ValidationError("motion fps must be positive");
    fps_ = fps;
  }

  std::span<double> frame(std::size_t t) { return {&data_[check(t) * kFrameDim], kFrameDim}; }
  std::span<const double> frame(std::size_t t) const { return {&data_[check(t) * kFrameDim], kFrameDim}; }

  std::span<double> pose(std::size_t t) { return {&data_[check(t) * kFrameDim], kPoseDim}; }
  std::span<const double> pose(std::size_t t) const { return {&data_[check(t) * kFrameDim], kPoseDim}; }

  std::span<double> translation(std::size_t t) { return {&data_[check(t) * kFrameDim + kPoseDim], 3}; }
  std::span<const double> translation(std::size_t t) const {
    return {&data_[check(t) * kFrameDim + kPoseDim], 3};
  }

  MotionSequence first_frames(std::size_t n) const {
    if (n == 0 || n > frames_) throw ValidationError("first_frames: bad count");
    MotionSequence out(n, fps_);
    std::copy(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n * kFrameDim), out.data_.begin());
    return out;
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

 private:
  std::size_t frames_ = 0;
  double fps_ = kDefaultFps;
  std::vector<double> data_;

  std::size_t check(std::size_t t) const {
    if (t >= frames_) throw ValidationError("frame index out of range");
    return t;
  }
};

// Copies the pose part (translation dropped) of the listed frames.
inline KeyPoseSet extract_key_poses(const MotionSequence& motion, const std::vector<std::size_t>& positions) {
  validate_key_order(positions);
  KeyPoseSet keys;
  keys.reserve(positions.size());
  for (std::size_t t : positions) {
    if (t >= motion.frames()) throw ValidationError("key position out of motion range");
    KeyPose k;
    k.frame = t;
    auto p = motion.pose(t);
    std::copy(p.begin(), p.end(), k.pose.begin());
    keys.push_back(k);
  }
  return keys;
}

enum class KeyStrategy { uniform, random, beat_aligned };

inline KeyStrategy key_strategy_from_string(const std::string& s) {
  if (s == "uniform") return KeyStrategy::uniform;
  if (s == "random") return KeyStrategy::random;
  if (s == "beat" || s == "beat_aligned") return KeyStrategy::beat_aligned;
  throw ValidationError("unknown key strategy: " + s);
}

// M strictly increasing frame indices inside the generated span [seed_len, T-1].
inline std::vector<std::size_t> sample_key_positions(std::size_t total_frames, std::size_t seed_len,
                                                     std::size_t count, KeyStrategy strategy,
                                                     std::mt19937_64& rng,
                                                     const std::vector<std::size_t>* beats = nullptr) {
  if (seed_len >= total_frames) throw ValidationError("sample_key_positions: seed span covers whole clip");
  std::size_t span = total_frames - seed_len;
  if (count == 0) return {};
  if (count > span) throw ValidationError("sample_key_positions: more keys than available frames");

  std::vector<std::size_t> out;
  out.reserve(count);
  switch (strategy) {
    case KeyStrategy::uniform:
      for (std::size_t i = 0; i < count; ++i) out.push_back(seed_len + (i + 1) * span / (count + 1));
      break;
    case KeyStrategy::random: {
      std::vector<std::size_t> pool(span);
      for (std::size_t i = 0; i < span; ++i) pool[i] = seed_len + i;
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(out.begin(), out.end());
      break;
    }
    case KeyStrategy::beat_aligned: {
      if (!beats) throw ValidationError("beat_aligned sampling requires a beat list");
      std::vector<std::size_t> eligible;
      for (std::size_t b : *beats)
        if (b >= seed_len && b < total_frames) eligible.push_back(b);
      if (eligible.size() < count) throw ValidationError("beat_aligned sampling: not enough beats in span");
      if (count == eligible.size()) {
        out = eligible;
      } else if (count == 1) {
        out.push_back(eligible[eligible.size() / 2]);
      } else {
        for (std::size_t i = 0; i < count; ++i)
          out.push_back(eligible[i * (eligible.size() - 1) / (count - 1)]);
      }
      break;
    }
  }
  validate_key_order(out);
  return out;
}

// Per-step pose-change magnitude over the 144-D rotation part; translation is
// excluded so the series is invariant to global-trajectory edits.
inline std::vector<double> kinetic_velocity(const MotionSequence& motion) {
  if (motion.frames() < 2) throw ValidationError("kinetic_velocity: need at least 2 frames");
  std::vector<double> v(motion.frames() - 1);
  for (std::size_t t = 0; t + 1 < motion.frames(); ++t) {
    auto a = motion.pose(t);
    auto b = motion.pose(t + 1);
    double s = 0.0;
    for (std::size_t j = 0; j < kPoseDim; ++j) {
      double d = b[j] - a[j];
      s += d * d;
    }
    v[t] = std::sqrt(s);
  }
  return v;
}

}  // namespace keymotion
