#pragma once

// Full architecture: music/motion transformer encoders feeding a cross-modal
// transformer conditioned on zero-padded key-pose embeddings, local
// positional embeddings, and the ordinary sinusoidal table; a linear output
// head maps back to 147-D frames. One-shot full-sequence prediction.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "keymotion/conditioning.hpp"
#include "keymotion/errors.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/music.hpp"
#include "keymotion/nn.hpp"
#include "keymotion/tape.hpp"
#include "keymotion/tensor.hpp"
#include "keymotion/transformer.hpp"

namespace keymotion {

enum class ModelPreset { large, light, tiny };

inline std::string preset_name(ModelPreset p) {
  switch (p) {
    case ModelPreset::large: return "large";
    case ModelPreset::light: return "light";
    case ModelPreset::tiny: return "tiny";
  }
  throw ValidationError("unknown preset");
}

inline ModelPreset preset_from_string(const std::string& s) {
  if (s == "large") return ModelPreset::large;
  if (s == "light") return ModelPreset::light;
  if (s == "tiny") return ModelPreset::tiny;
  throw ValidationError("unknown preset: " + s);
}

struct DanceModelConfig {
  std::size_t d_model = 32;
  std::size_t cross_layers = 2;
  std::size_t num_heads = 2;
  std::size_t encoder_layers = 1;
  std::size_t ff_mult = 4;
  std::size_t max_len = 512;
  std::size_t seed_len = 4;    // T'
  std::size_t music_len = 16;  // T
  bool use_local_pe = true;
  bool allow_seed_keys = false;
  std::string preset = "tiny";

  // large: 12 layers / 10 heads / 800 wide; light: 8 / 4 / 256; encoders 4
  // layers. tiny is the desk-scale preset: 2 / 2 / 32 with 1-layer encoders.
  static DanceModelConfig from_preset(ModelPreset p, std::size_t seed_len, std::size_t music_len) {
    DanceModelConfig cfg;
    cfg.preset = preset_name(p);
    cfg.seed_len = seed_len;
    cfg.music_len = music_len;
    switch (p) {
      case ModelPreset::large:
        cfg.d_model = 800;
        cfg.cross_layers = 12;
        cfg.num_heads = 10;
        cfg.encoder_layers = 4;
        break;
      case ModelPreset::light:
        cfg.d_model = 256;
        cfg.cross_layers = 8;
        cfg.num_heads = 4;
        cfg.encoder_layers = 4;
        break;
      case ModelPreset::tiny:
        cfg.d_model = 32;
        cfg.cross_layers = 2;
        cfg.num_heads = 2;
        cfg.encoder_layers = 1;
        break;
    }
    cfg.max_len = std::max<std::size_t>(cfg.max_len, seed_len + music_len);
    cfg.validate();
    return cfg;
  }

  TransformerConfig cross_config() const {
    return {cross_layers, num_heads, d_model, ff_mult * d_model, max_len};
  }
  TransformerConfig encoder_config() const {
    return {encoder_layers, num_heads, d_model, ff_mult * d_model, max_len};
  }

  void validate() const {
    cross_config().validate();
    encoder_config().validate();
    if (d_model % 2 != 0) throw ValidationError("config: d_model must be even for the local PE split");
    if ((d_model / 2) % 2 != 0) throw ValidationError("config: d_model/2 must be even for a sinusoidal half-table");
    if (seed_len == 0) throw ValidationError("config: seed_len must be positive");
    if (seed_len >= music_len) throw ValidationError("config: seed_len must be smaller than music_len");
    if (seed_len + music_len > max_len) throw ValidationError("config: max_len too small for T' + T");
  }
};

struct DanceModelWeights {
  LinearLayer music_embed;   // 15 -> d
  LinearLayer motion_embed;  // 147 -> d
  LinearLayer key_embed;     // 144 -> d
  EncoderWeights music_encoder;
  EncoderWeights motion_encoder;
  EncoderWeights cross_transformer;
  LinearLayer output_proj;  // d -> 147

  DanceModelWeights() = default;

  explicit DanceModelWeights(const DanceModelConfig& cfg)
      : music_embed(cfg.d_model, kMusicDim),
        motion_embed(cfg.d_model, kFrameDim),
        key_embed(cfg.d_model, kPoseDim),
        music_encoder(cfg.encoder_config()),
        motion_encoder(cfg.encoder_config()),
        cross_transformer(cfg.cross_config()),
        output_proj(kFrameDim, cfg.d_model) {}

  void init(std::mt19937_64& rng) {
    music_embed.init(rng);
    motion_embed.init(rng);
    key_embed.init(rng);
    music_encoder.init(rng);
    motion_encoder.init(rng);
    cross_transformer.init(rng);
    output_proj.init(rng);
  }

  std::vector<Parameter> parameters() {
    std::vector<Parameter> out;
    music_embed.collect("music_embed", out);
    motion_embed.collect("motion_embed", out);
    key_embed.collect("key_embed", out);
    music_encoder.collect("music_encoder", out);
    motion_encoder.collect("motion_encoder", out);
    cross_transformer.collect("cross", out);
    output_proj.collect("output_proj", out);
    return out;
  }
};

// omega(t) = 1 + lambda * sum_i exp(-(tau - tau_i)^2 / (2 sigma^2)) with
// normalized time tau = t/T.
inline double weight_curve(std::size_t t, const std::vector<std::size_t>& key_frames, std::size_t total_frames,
                           double lambda, double sigma) {
  if (sigma <= 0.0) throw ValidationError("weight_curve: sigma must be positive");
  if (lambda < 0.0) throw ValidationError("weight_curve: lambda must be >= 0");
  double tau = static_cast<double>(t) / static_cast<double>(total_frames);
  double acc = 0.0;
  for (std::size_t ti : key_frames) {
    double d = tau - static_cast<double>(ti) / static_cast<double>(total_frames);
    acc += std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  return 1.0 + lambda * acc;
}

inline Tensor weight_curve_values(const std::vector<std::size_t>& key_frames, std::size_t total_frames,
                                  double lambda, double sigma) {
  Tensor w({total_frames});
  for (std::size_t t = 0; t < total_frames; ++t)
    w.data[t] = weight_curve(t, key_frames, total_frames, lambda, sigma);
  return w;
}

struct LossParams {
  double lambda = 3.0;
  double sigma = 0.1;

  void validate() const {
    if (lambda < 0.0) throw ValidationError("loss: lambda must be >= 0");
    if (sigma <= 0.0) throw ValidationError("loss: sigma must be positive");
  }
};

// L = (1/T) sum_t omega(t) ||gt_t - pred_t||^2 over all 147 dims.
inline Tape::Var weighted_reconstruction_loss(Tape& t, Tape::Var pred, const Tensor& ground_truth,
                                              const std::vector<std::size_t>& key_frames,
                                              const LossParams& params) {
  params.validate();
  const Tensor& p = t.value(pred);
  if (!p.same_shape(ground_truth))
    throw DimensionError("loss: prediction " + p.shape_str() + " vs ground truth " + ground_truth.shape_str());
  std::size_t frames = p.rows();
  Tensor w = weight_curve_values(key_frames, frames, params.lambda, params.sigma);
  Tape::Var diff = t.sub(pred, t.constant(ground_truth));
  Tape::Var sq = t.mul(diff, diff);
  return t.scale(t.sum_all(t.scale_rows(sq, w)), 1.0 / static_cast<double>(frames));
}

// Eager twin of the tape loss, for logging and tests.
inline double weighted_loss_value(const Tensor& pred, const Tensor& ground_truth,
                                  const std::vector<std::size_t>& key_frames, const LossParams& params) {
  params.validate();
  if (!pred.same_shape(ground_truth)) throw DimensionError("loss: shape mismatch");
  std::size_t frames = pred.rows(), c = pred.cols();
  double total = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    double sq = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double d = ground_truth.data[t * c + j] - pred.data[t * c + j];
      sq += d * d;
    }
    total += weight_curve(t, key_frames, frames, params.lambda, params.sigma) * sq;
  }
  return total / static_cast<double>(frames);
}

// E_in = [E_motion ; E_music] + key_embedding + local_pe + pe_rows
inline Tape::Var assemble_cross_input(Tape& t, Tape::Var e_motion, Tape::Var e_music,
                                      Tape::Var key_embedding, const Tensor& local_pe,
                                      const Tensor& pe_rows) {
  std::size_t l = t.value(e_motion).rows() + t.value(e_music).rows();
  std::size_t d = t.value(e_motion).cols();
  if (t.value(e_music).cols() != d) throw DimensionError("assemble: embedding widths differ");
  const Tensor& ke = t.value(key_embedding);
  if (!ke.is_matrix() || ke.rows() != l || ke.cols() != d)
    throw DimensionError("assemble: key embedding must be [" + std::to_string(l) + " x " + std::to_string(d) + "]");
  if (!local_pe.is_matrix() || local_pe.rows() != l || local_pe.cols() != d)
    throw DimensionError("assemble: local PE must be [" + std::to_string(l) + " x " + std::to_string(d) + "]");
  if (!pe_rows.is_matrix() || pe_rows.rows() != l || pe_rows.cols() != d)
    throw DimensionError("assemble: PE rows must be [" + std::to_string(l) + " x " + std::to_string(d) + "]");
  Tape::Var joint = t.concat_rows(e_motion, e_music);
  Tape::Var with_keys = t.add(joint, key_embedding);
  Tensor tables = local_pe;
  for (std::size_t i = 0; i < tables.data.size(); ++i) tables.data[i] += pe_rows.data[i];
  return t.add(with_keys, t.constant(std::move(tables)));
}

class DanceModel {
 public:
  DanceModel(const DanceModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), weights_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    weights_.init(rng);
    pe_full_ = sinusoidal_pe(cfg_.max_len, cfg_.d_model);
    pe_half_ = sinusoidal_pe(cfg_.max_len, cfg_.d_model / 2);
  }

  const DanceModelConfig& config() const { return cfg_; }
  DanceModelWeights& weights() { return weights_; }
  const PositionalTable& half_table() const { return pe_half_; }
  std::vector<Parameter> parameters() { return weights_.parameters(); }

  // Predicted frames for t = 0..T-1 as a [T x 147] node (rows offset..L of
  // the projected cross output).
  Tape::Var forward_tape(Tape& t, const MusicFeatureSequence& music, const MotionSequence& seed_motion,
                         const KeyPoseSet& keys) {
    std::size_t total = music.frames();
    std::size_t seed_len = seed_motion.frames();
    validate_inputs(total, seed_len, keys);
    std::size_t l = seed_len + total;

    Mask seed_mask = full_mask(seed_len);
    Mask music_mask = full_mask(total);
    Mask cross_mask = full_mask(l);

    Tape::Var e_music = encoder_forward(
        t, weights_.music_embed.forward(t, t.constant(music.to_matrix())), weights_.music_encoder, &music_mask);
    Tape::Var e_motion = encoder_forward(
        t, weights_.motion_embed.forward(t, t.constant(seed_motion.to_matrix())), weights_.motion_encoder,
        &seed_mask);

    Tape::Var key_rows = embed_key_poses_tape(t, keys, l, seed_len, weights_.key_embed);
    Tensor local_pe = cfg_.use_local_pe
                          ? local_positional_embedding(key_positions(keys), l, seed_len, pe_half_)
                          : Tensor({l, cfg_.d_model});
    Tensor pe_rows({l, cfg_.d_model});
    for (std::size_t p = 0; p < l; ++p) {
      auto row = pe_full_.row(p);
      for (std::size_t j = 0; j < cfg_.d_model; ++j) pe_rows.at(p, j) = row[j];
    }

    Tape::Var joint = assemble_cross_input(t, e_motion, e_music, key_rows, local_pe, pe_rows);
    Tape::Var cross = encoder_forward(t, joint, weights_.cross_transformer, &cross_mask);
    Tape::Var projected = weights_.output_proj.forward(t, cross);
    return t.slice_rows(projected, seed_len, l);
  }

  Tensor forward(const MusicFeatureSequence& music, const MotionSequence& seed_motion, const KeyPoseSet& keys) {
    Tape tape;
    return tape.value(forward_tape(tape, music, seed_motion, keys));
  }

  // Full-length output sequence: the seed span is echoed from the input, the
  // generated span [T', T) comes from the prediction.
  MotionSequence generate(const MusicFeatureSequence& music, const MotionSequence& seed_motion,
                          const KeyPoseSet& keys) {
    Tensor pred = forward(music, seed_motion, keys);
    std::size_t total = music.frames();
    std::size_t seed_len = seed_motion.frames();
    MotionSequence out(total, music.fps());
    for (std::size_t t = 0; t < total; ++t) {
      auto dst = out.frame(t);
      if (t < seed_len) {
        auto src = seed_motion.frame(t);
        std::copy(src.begin(), src.end(), dst.begin());
      } else {
        for (std::size_t j = 0; j < kFrameDim; ++j) dst[j] = pred.at(t, j);
      }
    }
    return out;
  }

 private:
  DanceModelConfig cfg_;
  DanceModelWeights weights_;
  PositionalTable pe_full_, pe_half_;

  void validate_inputs(std::size_t total, std::size_t seed_len, const KeyPoseSet& keys) const {
    if (seed_len == 0) throw ValidationError("forward: seed motion is empty");
    if (seed_len >= total) throw ValidationError("forward: seed length must be smaller than music length");
    if (seed_len + total > cfg_.max_len)
      throw ValidationError("forward: sequence longer than config max_len");
    std::vector<std::size_t> pos = key_positions(keys);
    validate_key_order(pos);
    for (std::size_t p : pos) {
      if (p >= total) throw ValidationError("forward: key pose outside the clip");
      if (!cfg_.allow_seed_keys && p < seed_len)
        throw ValidationError("forward: key pose inside the seed span (allow_seed_keys disabled)");
    }
  }
};

}  // namespace keymotion
