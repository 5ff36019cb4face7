#pragma once

// Quantitative metrics: key-pose consistency error, smoothness coefficient of
// variation, motion-beat detection, and the musical beat hit rate.

#include <cmath>
#include <optional>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/motion.hpp"

namespace keymotion {

// Mean squared 144-D pose error at the key frames. No keys -> no value
// (explicitly not 0).
inline std::optional<double> consistency_error(const MotionSequence& generated, const KeyPoseSet& keys) {
  if (keys.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& k : keys) {
    if (k.frame >= generated.frames()) throw ValidationError("consistency_error: key outside generated range");
    auto p = generated.pose(k.frame);
    double sq = 0.0;
    for (std::size_t j = 0; j < kPoseDim; ++j) {
      double d = p[j] - k.pose[j];
      sq += d * d;
    }
    total += sq;
  }
  return total / static_cast<double>(keys.size());
}

// sd/|mean| (population sd) of the per-step 147-D frame-difference norms.
// Frozen motion (zero mean difference) has no defined value.
inline std::optional<double> smoothness_cv(const MotionSequence& motion) {
  if (motion.frames() < 3) throw ValidationError("smoothness_cv: need at least 3 frames");
  std::size_t n = motion.frames() - 1;
  std::vector<double> d(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto a = motion.frame(t);
    auto b = motion.frame(t + 1);
    double sq = 0.0;
    for (std::size_t j = 0; j < kFrameDim; ++j) {
      double diff = b[j] - a[j];
      sq += diff * diff;
    }
    d[t] = std::sqrt(sq);
  }
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  if (mean == 0.0) return std::nullopt;
  double var = 0.0;
  for (double v : d) {
    double dv = v - mean;
    var += dv * dv;
  }
  var /= static_cast<double>(n);
  return std::sqrt(var) / std::abs(mean);
}

// Dance motion beats: local minima of the kinetic velocity. Plateau minima
// report their first index.
inline std::vector<std::size_t> detect_motion_beats(const MotionSequence& motion) {
  if (motion.frames() < 3) throw ValidationError("detect_motion_beats: need at least 3 frames");
  std::vector<double> v = kinetic_velocity(motion);
  std::vector<std::size_t> beats;
  std::size_t i = 1;
  while (i + 1 <= v.size() - 1) {
    if (v[i - 1] > v[i]) {
      std::size_t j = i;
      while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
      if (j + 1 < v.size() && v[j + 1] > v[i]) beats.push_back(i);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return beats;
}

// A musical beat at frame m is hit when some motion beat b lies within
// |b - m| <= delta frames (the frame-domain form of the +-delta/fps window).
inline std::optional<double> beat_hit_rate(const std::vector<std::size_t>& motion_beats,
                                           const std::vector<std::size_t>& music_beats, int delta,
                                           double fps) {
  if (fps <= 0.0) throw ValidationError("beat_hit_rate: fps must be positive");
  if (delta < 0) throw ValidationError("beat_hit_rate: delta must be >= 0");
  if (music_beats.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t m : music_beats) {
    bool hit = false;
    for (std::size_t b : motion_beats) {
      std::size_t lo = b > m ? m : b;
      std::size_t hi = b > m ? b : m;
      if (hi - lo <= static_cast<std::size_t>(delta)) {
        hit = true;
        break;
      }
    }
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(music_beats.size());
}

struct EvalReport {
  std::optional<double> consistency;
  std::optional<double> smoothness;
  std::vector<std::pair<int, std::optional<double>>> hit_rates;  // per delta
  std::size_t n_keys = 0;
  std::size_t n_music_beats = 0;
  std::size_t n_motion_beats = 0;
};

inline EvalReport evaluate(const MotionSequence& generated, const KeyPoseSet& keys,
                           const std::vector<std::size_t>& music_beats, const std::vector<int>& deltas,
                           double fps) {
  EvalReport report;
  report.n_keys = keys.size();
  report.n_music_beats = music_beats.size();
  report.consistency = consistency_error(generated, keys);
  report.smoothness = smoothness_cv(generated);
  std::vector<std::size_t> motion_beats = detect_motion_beats(generated);
  report.n_motion_beats = motion_beats.size();
  for (int d : deltas) report.hit_rates.emplace_back(d, beat_hit_rate(motion_beats, music_beats, d, fps));
  return report;
}

inline std::vector<int> default_deltas() { return {1, 2, 3, 4, 5}; }

}  // namespace keymotion
