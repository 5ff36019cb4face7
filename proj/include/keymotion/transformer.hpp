#pragma once

// Shared attention machinery: sinusoidal tables, masks, scaled dot-product
// attention with per-head input projections, multi-head wrapper, and the
// post-norm encoder stack used by the music encoder, motion encoder, and the
// cross-modal transformer.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/nn.hpp"
#include "keymotion/tape.hpp"
#include "keymotion/tensor.hpp"

namespace keymotion {

struct TransformerConfig {
  std::size_t num_layers = 0;
  std::size_t num_heads = 1;
  std::size_t d_model = 0;
  std::size_t ff_dim = 0;  // 0 -> 4 * d_model
  std::size_t max_len = 512;

  std::size_t head_dim() const { return d_model / num_heads; }
  std::size_t feed_forward_dim() const { return ff_dim ? ff_dim : 4 * d_model; }

  void validate() const {
    if (num_heads == 0 || d_model == 0 || max_len == 0)
      throw ValidationError("transformer config: heads, d_model, max_len must be positive");
    if (d_model % num_heads != 0)
      throw ValidationError("transformer config: d_model must be divisible by num_heads");
  }
};

// Row-major [rows x cols] attention mask; true means attention allowed.
struct Mask {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> allow;

  Mask(std::size_t r, std::size_t c, bool allowed) : rows(r), cols(c), allow(r * c, allowed ? 1 : 0) {
    if (r == 0 || c == 0) throw ValidationError("mask: dimensions must be positive");
    if (!allowed) validate();
  }

  static Mask full(std::size_t t) { return Mask(t, t, true); }

  // allow (i,j) iff j <= i
  static Mask causal(std::size_t t) {
    Mask m(t, t, true);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = i + 1; j < t; ++j) m.allow[i * t + j] = 0;
    return m;
  }

  bool at(std::size_t i, std::size_t j) const { return allow[i * cols + j] != 0; }

  void set(std::size_t i, std::size_t j, bool v) { allow[i * cols + j] = v ? 1 : 0; }

  void validate() const {
    for (std::size_t i = 0; i < rows; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < cols && !any; ++j) any = allow[i * cols + j] != 0;
      if (!any) throw ValidationError("mask: row " + std::to_string(i) + " allows nothing");
    }
  }
};

inline Mask causal_mask(std::size_t t) { return Mask::causal(t); }
inline Mask full_mask(std::size_t t) { return Mask::full(t); }

struct PositionalTable {
  std::size_t length = 0, dim = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t pos) const {
    if (pos >= length) throw ValidationError("positional table: position out of range");
    return {&data[pos * dim], dim};
  }
};

// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(...)
inline PositionalTable sinusoidal_pe(std::size_t n, std::size_t d) {
  if (n < 1) throw ValidationError("sinusoidal_pe: need at least one row");
  if (d == 0 || d % 2 != 0) throw ValidationError("sinusoidal_pe: dimension must be positive and even");
  PositionalTable table;
  table.length = n;
  table.dim = d;
  table.data.resize(n * d);
  for (std::size_t pos = 0; pos < n; ++pos)
    for (std::size_t i = 0; i < d / 2; ++i) {
      double angle = static_cast<double>(pos) /
                     std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
      table.data[pos * d + 2 * i] = std::sin(angle);
      table.data[pos * d + 2 * i + 1] = std::cos(angle);
    }
  return table;
}

struct AttentionHeadWeights {
  LinearLayer query, key, value;

  AttentionHeadWeights() = default;
  AttentionHeadWeights(std::size_t d_model, std::size_t head_dim)
      : query(head_dim, d_model), key(head_dim, d_model), value(head_dim, d_model) {}

  void init(std::mt19937_64& rng) {
    query.init(rng);
    key.init(rng);
    value.init(rng);
  }
  void collect(const std::string& prefix, std::vector<Parameter>& out) {
    query.collect(prefix + ".q", out);
    key.collect(prefix + ".k", out);
    value.collect(prefix + ".v", out);
  }
};

// softmax(q(Q) k(K)^T / sqrt(D) with mask) . v(V)
inline Tape::Var scaled_dot_attention(Tape& t, Tape::Var q_in, Tape::Var k_in, Tape::Var v_in,
                                      AttentionHeadWeights& w, const Mask* mask) {
  Tape::Var q = w.query.forward(t, q_in);
  Tape::Var k = w.key.forward(t, k_in);
  Tape::Var v = w.value.forward(t, v_in);
  std::size_t rows = t.value(q).rows();
  std::size_t cols = t.value(k).rows();
  if (mask && (mask->rows != rows || mask->cols != cols))
    throw DimensionError("attention mask is " + std::to_string(mask->rows) + "x" + std::to_string(mask->cols) +
                         ", logits are " + std::to_string(rows) + "x" + std::to_string(cols));
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w.query.out_dim()));
  Tape::Var logits = t.scale(t.matmul(q, t.transpose(k)), inv_sqrt_d);
  Tape::Var weights = t.softmax_rows(logits, mask ? mask->allow.data() : nullptr);
  return t.matmul(weights, v);
}

struct MultiHeadWeights {
  std::vector<AttentionHeadWeights> heads;
  LinearLayer output;

  MultiHeadWeights() = default;
  MultiHeadWeights(std::size_t d_model, std::size_t num_heads) : output(d_model, d_model) {
    if (d_model % num_heads != 0) throw ValidationError("multi-head: d_model not divisible by heads");
    heads.reserve(num_heads);
    for (std::size_t h = 0; h < num_heads; ++h) heads.emplace_back(d_model, d_model / num_heads);
  }

  void init(std::mt19937_64& rng) {
    for (auto& h : heads) h.init(rng);
    output.init(rng);
  }
  void collect(const std::string& prefix, std::vector<Parameter>& out) {
    for (std::size_t h = 0; h < heads.size(); ++h)
      heads[h].collect(prefix + ".head" + std::to_string(h), out);
    output.collect(prefix + ".out", out);
  }
};

// Heads run independently on the shared input, outputs are concatenated along
// the feature axis and projected back to d_model.
inline Tape::Var multi_head_attention(Tape& t, Tape::Var q_in, Tape::Var kv_in, MultiHeadWeights& w,
                                      const Mask* mask) {
  if (w.heads.empty()) throw ValidationError("multi-head: no heads");
  std::vector<Tape::Var> outs;
  outs.reserve(w.heads.size());
  for (auto& h : w.heads) outs.push_back(scaled_dot_attention(t, q_in, kv_in, kv_in, h, mask));
  Tape::Var cat = outs.size() == 1 ? outs[0] : t.concat_cols(outs);
  return w.output.forward(t, cat);
}

inline Tape::Var self_attention(Tape& t, Tape::Var x, MultiHeadWeights& w, const Mask* mask) {
  return multi_head_attention(t, x, x, w, mask);
}

struct EncoderLayerWeights {
  MultiHeadWeights attention;
  Tensor norm1_gain, norm1_bias;
  LinearLayer ff_in, ff_out;
  Tensor norm2_gain, norm2_bias;

  EncoderLayerWeights() = default;
  EncoderLayerWeights(std::size_t d_model, std::size_t num_heads, std::size_t ff_dim)
      : attention(d_model, num_heads),
        norm1_gain({d_model}),
        norm1_bias({d_model}),
        ff_in(ff_dim, d_model),
        ff_out(d_model, ff_dim),
        norm2_gain({d_model}),
        norm2_bias({d_model}) {
    for (Tensor* t : {&norm1_gain, &norm1_bias, &norm2_gain, &norm2_bias}) t->requires_grad = true;
    norm1_gain.fill(1.0);
    norm2_gain.fill(1.0);
  }

  void init(std::mt19937_64& rng) {
    attention.init(rng);
    ff_in.init(rng);
    ff_out.init(rng);
  }
  void collect(const std::string& prefix, std::vector<Parameter>& out) {
    attention.collect(prefix + ".attn", out);
    out.push_back({prefix + ".norm1.gain", &norm1_gain});
    out.push_back({prefix + ".norm1.bias", &norm1_bias});
    ff_in.collect(prefix + ".ff_in", out);
    ff_out.collect(prefix + ".ff_out", out);
    out.push_back({prefix + ".norm2.gain", &norm2_gain});
    out.push_back({prefix + ".norm2.bias", &norm2_bias});
  }
};

// Post-norm residual layout: x -> attn -> add & norm -> ff -> add & norm.
inline Tape::Var encoder_layer_forward(Tape& t, Tape::Var x, EncoderLayerWeights& w, const Mask* mask) {
  Tape::Var attn = self_attention(t, x, w.attention, mask);
  Tape::Var h = t.layer_norm(t.add(x, attn), t.leaf(w.norm1_gain), t.leaf(w.norm1_bias));
  Tape::Var ff = w.ff_out.forward(t, t.relu(w.ff_in.forward(t, h)));
  return t.layer_norm(t.add(h, ff), t.leaf(w.norm2_gain), t.leaf(w.norm2_bias));
}

struct EncoderWeights {
  std::vector<EncoderLayerWeights> layers;

  EncoderWeights() = default;
  explicit EncoderWeights(const TransformerConfig& cfg) {
    cfg.validate();
    layers.reserve(cfg.num_layers);
    for (std::size_t i = 0; i < cfg.num_layers; ++i)
      layers.emplace_back(cfg.d_model, cfg.num_heads, cfg.feed_forward_dim());
  }

  void init(std::mt19937_64& rng) {
    for (auto& l : layers) l.init(rng);
  }
  void collect(const std::string& prefix, std::vector<Parameter>& out) {
    for (std::size_t i = 0; i < layers.size(); ++i)
      layers[i].collect(prefix + ".layer" + std::to_string(i), out);
  }
};

// Zero layers is the identity.
inline Tape::Var encoder_forward(Tape& t, Tape::Var x, EncoderWeights& w, const Mask* mask) {
  Tape::Var h = x;
  for (auto& layer : w.layers) h = encoder_layer_forward(t, h, layer, mask);
  return h;
}

}  // namespace keymotion
