#pragma once

// 15-D per-frame music representation: 12 chroma bins, a (beat, downbeat)
// flag pair, and one onset-strength value. Column layout is fixed:
// chroma [0,12), downbeat [12,14), onset [14].

#include <cstdint>
#include <span>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/tensor.hpp"

namespace keymotion {

inline constexpr std::size_t kChromaDim = 12;
inline constexpr std::size_t kDownbeatDim = 2;
inline constexpr std::size_t kMusicDim = 15;
inline constexpr std::size_t kBeatFlagColumn = 12;

struct BeatAnnotation {
  std::vector<std::size_t> frames;  // strictly increasing
};

class MusicFeatureSequence {
 public:
  MusicFeatureSequence() = default;

  MusicFeatureSequence(std::size_t frames, double fps) : frames_(frames), fps_(fps), data_(frames * kMusicDim, 0.0) {
    if (frames == 0) throw ValidationError("music sequence must be nonempty");
    if (fps <= 0.0) throw ValidationError("music fps must be positive");
  }

  // Ingestion clamps chroma into [0,1]; any width other than 15 is rejected.
  static MusicFeatureSequence from_matrix(const Tensor& m, double fps) {
    if (!m.is_matrix() || m.cols() != kMusicDim)
      throw ValidationError("music matrix must be [T x 15], got " + m.shape_str());
    if (!m.all_finite()) throw ValidationError("music matrix contains non-finite values");
    MusicFeatureSequence seq(m.rows(), fps);
    seq.data_ = m.data;
    for (std::size_t t = 0; t < seq.frames_; ++t)
      for (std::size_t c = 0; c < kChromaDim; ++c) {
        double& v = seq.data_[t * kMusicDim + c];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
      }
    return seq;
  }

  Tensor to_matrix() const {
    Tensor m({frames_, kMusicDim});
    m.data = data_;
    return m;
  }

  std::size_t frames() const { return frames_; }
  double fps() const { return fps_; }

  std::span<double> frame(std::size_t t) { return {&data_[check(t) * kMusicDim], kMusicDim}; }
  std::span<const double> frame(std::size_t t) const { return {&data_[check(t) * kMusicDim], kMusicDim}; }

  double& at(std::size_t t, std::size_t c) { return data_[check(t) * kMusicDim + c]; }
  double at(std::size_t t, std::size_t c) const { return data_[check(t) * kMusicDim + c]; }

  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t frames_ = 0;
  double fps_ = kDefaultFpsMusic();
  std::vector<double> data_;

  static constexpr double kDefaultFpsMusic() { return 30.0; }

  std::size_t check(std::size_t t) const {
    if (t >= frames_) throw ValidationError("music frame index out of range");
    return t;
  }
};

inline MusicFeatureSequence assemble_features(const Tensor& chroma, const Tensor& downbeat,
                                              const Tensor& onset, double fps) {
  if (!chroma.is_matrix() || chroma.cols() != kChromaDim)
    throw ValidationError("assemble_features: chroma must be [T x 12]");
  if (!downbeat.is_matrix() || downbeat.cols() != kDownbeatDim)
    throw ValidationError("assemble_features: downbeat must be [T x 2]");
  bool onset_col = onset.is_matrix() && onset.cols() == 1;
  if (!onset_col && !onset.is_vector()) throw ValidationError("assemble_features: onset must be [T x 1] or [T]");
  std::size_t t_count = chroma.rows();
  std::size_t onset_rows = onset_col ? onset.rows() : onset.shape.at(0);
  if (downbeat.rows() != t_count || onset_rows != t_count)
    throw ValidationError("assemble_features: inputs disagree on frame count");

  MusicFeatureSequence seq(t_count, fps);
  for (std::size_t t = 0; t < t_count; ++t) {
    auto f = seq.frame(t);
    for (std::size_t c = 0; c < kChromaDim; ++c) f[c] = chroma.at(t, c);
    f[kChromaDim] = downbeat.at(t, 0);
    f[kChromaDim + 1] = downbeat.at(t, 1);
    f[kMusicDim - 1] = onset.data[t];
  }
  return MusicFeatureSequence::from_matrix(seq.to_matrix(), fps);
}

// Beats come straight from the beat-flag channel; no onset peak-picking.
inline BeatAnnotation musical_beats(const MusicFeatureSequence& features, double threshold = 0.5) {
  if (threshold < 0.0) throw ValidationError("musical_beats: threshold must be >= 0");
  BeatAnnotation out;
  for (std::size_t t = 0; t < features.frames(); ++t)
    if (features.at(t, kBeatFlagColumn) > threshold) out.frames.push_back(t);
  return out;
}

}  // namespace keymotion
