#pragma once

// The two key-pose conditioning signals fed to the cross-modal transformer:
// a zero-padded embedding of the key poses, and a "local" positional
// embedding built from the distance to the nearest key pose on each side.
//
// Cross-modal sequence layout: positions [0, offset) hold the seed-motion
// embedding, positions [offset, L) are music-aligned; motion frame t maps to
// sequence position offset + t. Both signals are zero on the seed prefix.

#include <cstdint>
#include <span>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/nn.hpp"
#include "keymotion/tape.hpp"
#include "keymotion/tensor.hpp"
#include "keymotion/transformer.hpp"

namespace keymotion {

inline std::vector<std::size_t> key_sequence_positions(const std::vector<std::size_t>& key_frames,
                                                       std::size_t seq_len, std::size_t offset) {
  validate_key_order(key_frames);
  std::vector<std::size_t> rows;
  rows.reserve(key_frames.size());
  for (std::size_t t : key_frames) {
    std::size_t p = offset + t;
    if (p >= seq_len) throw ValidationError("key pose frame maps outside the cross-modal sequence");
    rows.push_back(p);
  }
  return rows;
}

struct KeyPoseEmbedding {
  Tensor rows;  // [L x d_model], zero outside active positions
  std::vector<std::size_t> active_positions;
};

// Eager variant for inspection and tests.
inline KeyPoseEmbedding embed_key_poses(const KeyPoseSet& keys, std::size_t seq_len, std::size_t offset,
                                        const LinearLayer& embed) {
  if (embed.in_dim() != kPoseDim) throw DimensionError("key-pose embedding layer must take 144 inputs");
  KeyPoseEmbedding out;
  out.rows = Tensor({seq_len, embed.out_dim()});
  out.active_positions = key_sequence_positions(key_positions(keys), seq_len, offset);
  if (keys.empty()) return out;
  Tensor poses({keys.size(), kPoseDim});
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = 0; j < kPoseDim; ++j) poses.at(i, j) = keys[i].pose[j];
  Tensor embedded = embed.apply(poses);
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = 0; j < embed.out_dim(); ++j)
      out.rows.at(out.active_positions[i], j) = embedded.at(i, j);
  return out;
}

// Differentiable variant used by the model. Returns a zero [L x d] matrix
// when there are no keys (constant node).
inline Tape::Var embed_key_poses_tape(Tape& t, const KeyPoseSet& keys, std::size_t seq_len,
                                      std::size_t offset, LinearLayer& embed) {
  if (embed.in_dim() != kPoseDim) throw DimensionError("key-pose embedding layer must take 144 inputs");
  auto rows = key_sequence_positions(key_positions(keys), seq_len, offset);
  if (keys.empty()) return t.constant(Tensor({seq_len, embed.out_dim()}));
  Tensor poses({keys.size(), kPoseDim});
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = 0; j < kPoseDim; ++j) poses.at(i, j) = keys[i].pose[j];
  Tape::Var embedded = embed.forward(t, t.constant(std::move(poses)));
  return t.scatter_rows(embedded, rows, seq_len);
}

// [L x 2*half.dim] matrix: for the music-aligned position of motion frame t,
// the left half is half_table[|t - t_i|] for the nearest key at t_i <= t and
// the right half is half_table[|t - t_j|] for the nearest key at t_j >= t.
// A missing neighbor leaves its half zero; distances clamp to the table end.
// A frame holding a key is its own neighbor on both sides (distance 0).
inline Tensor local_positional_embedding(const std::vector<std::size_t>& key_frames, std::size_t seq_len,
                                         std::size_t offset, const PositionalTable& half_table) {
  validate_key_order(key_frames);
  std::size_t half = half_table.dim;
  Tensor out({seq_len, 2 * half});
  if (key_frames.empty()) return out;

  for (std::size_t p = offset; p < seq_len; ++p) {
    std::size_t t = p - offset;
    // nearest key at or left of t
    std::size_t li = 0;
    bool has_left = false;
    for (std::size_t k = 0; k < key_frames.size() && key_frames[k] <= t; ++k) {
      li = key_frames[k];
      has_left = true;
    }
    // nearest key at or right of t
    std::size_t ri = 0;
    bool has_right = false;
    for (std::size_t k = key_frames.size(); k-- > 0 && key_frames[k] >= t;) {
      ri = key_frames[k];
      has_right = true;
    }
    if (has_left) {
      std::size_t d = std::min(t - li, half_table.length - 1);
      auto row = half_table.row(d);
      for (std::size_t j = 0; j < half; ++j) out.at(p, j) = row[j];
    }
    if (has_right) {
      std::size_t d = std::min(ri - t, half_table.length - 1);
      auto row = half_table.row(d);
      for (std::size_t j = 0; j < half; ++j) out.at(p, half + j) = row[j];
    }
  }
  return out;
}

}  // namespace keymotion
