#pragma once

// Gradient-check suites: one finite-difference check per differentiable op,
// plus an end-to-end check of the weighted loss through the full model.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "keymotion/gradcheck.hpp"
#include "keymotion/model.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/music.hpp"
#include "keymotion/synth.hpp"
#include "keymotion/transformer.hpp"

namespace keymotion {

struct OpCheck {
  std::string name;
  double max_rel_err = 0.0;
};

namespace diag_detail {

inline Tensor rand_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t({r, c});
  t.requires_grad = true;
  fill_uniform(t, lo, hi, rng);
  return t;
}

inline Tensor rand_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t({n});
  t.requires_grad = true;
  fill_uniform(t, lo, hi, rng);
  return t;
}

// Project an op output to a scalar with a fixed random matrix so every output
// coordinate influences the loss.
inline Tape::Var project(Tape& t, Tape::Var out, const Tensor& probe) {
  return t.sum_all(t.mul(out, t.constant(probe)));
}

inline Tensor probe_like(const Tensor& shape_src, std::mt19937_64& rng) {
  Tensor p(shape_src.shape);
  fill_uniform(p, -1.0, 1.0, rng);
  return p;
}

}  // namespace diag_detail

// One finite-difference check per tape primitive (and the composites built
// from them). eps = 1e-5 central differences on f64.
inline std::vector<OpCheck> op_gradcheck_suite(std::uint64_t seed) {
  using diag_detail::probe_like;
  using diag_detail::project;
  using diag_detail::rand_mat;
  using diag_detail::rand_vec;

  std::mt19937_64 rng(seed);
  std::vector<OpCheck> results;
  const double eps = 1e-5;

  auto run = [&](const std::string& name, auto&& make_params, auto&& build) {
    std::vector<Parameter> params = make_params();
    GradCheckReport r = grad_check(build, params, eps, 64, rng);
    results.push_back({name, r.max_rel_err});
  };

  {
    Tensor a = rand_mat(3, 4, rng), b = rand_mat(3, 4, rng);
    Tensor probe = probe_like(a, rng);
    run("add", [&] { return std::vector<Parameter>{{"a", &a}, {"b", &b}}; },
        [&](Tape& t) { return project(t, t.add(t.leaf(a), t.leaf(b)), probe); });
    run("sub", [&] { return std::vector<Parameter>{{"a", &a}, {"b", &b}}; },
        [&](Tape& t) { return project(t, t.sub(t.leaf(a), t.leaf(b)), probe); });
    run("mul", [&] { return std::vector<Parameter>{{"a", &a}, {"b", &b}}; },
        [&](Tape& t) { return project(t, t.mul(t.leaf(a), t.leaf(b)), probe); });
    run("scale", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.scale(t.leaf(a), -1.7), probe); });
    run("sum_all", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return t.sum_all(t.leaf(a)); });
  }
  {
    Tensor a = rand_mat(3, 4, rng, 0.5, 2.0);
    Tensor probe = probe_like(a, rng);
    run("log", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.log(t.leaf(a)), probe); });
  }
  {
    // keep inputs away from the kink at 0
    Tensor a = rand_mat(4, 5, rng);
    for (auto& v : a.data) v += (v >= 0.0 ? 0.2 : -0.2);
    Tensor probe = probe_like(a, rng);
    run("relu", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.relu(t.leaf(a)), probe); });
  }
  {
    Tensor x = rand_mat(3, 5, rng);
    Tensor b = rand_vec(5, rng);
    Tensor probe = probe_like(x, rng);
    run("add_rowvec", [&] { return std::vector<Parameter>{{"x", &x}, {"b", &b}}; },
        [&](Tape& t) { return project(t, t.add_rowvec(t.leaf(x), t.leaf(b)), probe); });
  }
  {
    Tensor a = rand_mat(3, 4, rng), b = rand_mat(4, 2, rng);
    Tensor probe({3, 2});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("matmul", [&] { return std::vector<Parameter>{{"a", &a}, {"b", &b}}; },
        [&](Tape& t) { return project(t, t.matmul(t.leaf(a), t.leaf(b)), probe); });
  }
  {
    Tensor a = rand_mat(3, 4, rng);
    Tensor probe({4, 3});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("transpose", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.transpose(t.leaf(a)), probe); });
  }
  {
    Tensor a = rand_mat(4, 6, rng);
    Tensor probe = probe_like(a, rng);
    run("softmax_rows", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.softmax_rows(t.leaf(a)), probe); });
    Mask mask = causal_mask(4);
    Tensor probe2({4, 4});
    fill_uniform(probe2, -1.0, 1.0, rng);
    Tensor sq = rand_mat(4, 4, rng);
    run("softmax_rows_masked", [&] { return std::vector<Parameter>{{"a", &sq}}; },
        [&](Tape& t) { return project(t, t.softmax_rows(t.leaf(sq), mask.allow.data()), probe2); });
  }
  {
    Tensor x = rand_mat(4, 6, rng);
    Tensor g = rand_vec(6, rng, 0.5, 1.5);
    Tensor b = rand_vec(6, rng);
    Tensor probe = probe_like(x, rng);
    run("layer_norm", [&] { return std::vector<Parameter>{{"x", &x}, {"gain", &g}, {"bias", &b}}; },
        [&](Tape& t) { return project(t, t.layer_norm(t.leaf(x), t.leaf(g), t.leaf(b)), probe); });
  }
  {
    Tensor a = rand_mat(2, 3, rng), b = rand_mat(4, 3, rng);
    Tensor probe({6, 3});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("concat_rows", [&] { return std::vector<Parameter>{{"a", &a}, {"b", &b}}; },
        [&](Tape& t) { return project(t, t.concat_rows(t.leaf(a), t.leaf(b)), probe); });
  }
  {
    Tensor a = rand_mat(3, 2, rng), b = rand_mat(3, 5, rng);
    Tensor probe({3, 7});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("concat_cols", [&] { return std::vector<Parameter>{{"a", &a}, {"b", &b}}; },
        [&](Tape& t) {
          const Tape::Var parts[2] = {t.leaf(a), t.leaf(b)};
          return project(t, t.concat_cols(std::span<const Tape::Var>(parts, 2)), probe);
        });
  }
  {
    Tensor a = rand_mat(6, 3, rng);
    Tensor probe({2, 3});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("slice_rows", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.slice_rows(t.leaf(a), 2, 4), probe); });
  }
  {
    Tensor a = rand_mat(3, 4, rng);
    Tensor probe({8, 4});
    fill_uniform(probe, -1.0, 1.0, rng);
    std::vector<std::size_t> rows{1, 4, 6};
    run("scatter_rows", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.scatter_rows(t.leaf(a), rows, 8), probe); });
  }
  {
    Tensor a = rand_mat(5, 3, rng);
    Tensor w = rand_vec(5, rng, 0.5, 3.0);
    w.requires_grad = false;
    Tensor probe = probe_like(a, rng);
    run("scale_rows", [&] { return std::vector<Parameter>{{"a", &a}}; },
        [&](Tape& t) { return project(t, t.scale_rows(t.leaf(a), w), probe); });
  }
  {
    LinearLayer lin(4, 6);
    lin.init(rng);
    Tensor x = rand_mat(3, 6, rng);
    Tensor probe({3, 4});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("linear",
        [&] {
          std::vector<Parameter> p{{"x", &x}};
          lin.collect("lin", p);
          return p;
        },
        [&](Tape& t) { return project(t, lin.forward(t, t.leaf(x)), probe); });
  }
  {
    AttentionHeadWeights head(8, 4);
    head.init(rng);
    Tensor x = rand_mat(5, 8, rng);
    Mask mask = causal_mask(5);
    Tensor probe({5, 4});
    fill_uniform(probe, -1.0, 1.0, rng);
    run("scaled_dot_attention",
        [&] {
          std::vector<Parameter> p{{"x", &x}};
          head.collect("head", p);
          return p;
        },
        [&](Tape& t) {
          Tape::Var xv = t.leaf(x);
          return project(t, scaled_dot_attention(t, xv, xv, xv, head, &mask), probe);
        });
  }
  return results;
}

// End-to-end: weighted loss through the full tiny model (2 cross layers,
// d_model 32, T=16, T'=4, M=2 keys).
inline GradCheckReport full_model_gradcheck(std::uint64_t seed, std::size_t coords_per_param = 2,
                                            ModelPreset preset = ModelPreset::tiny) {
  const std::size_t total = 16, seed_len = 4;
  DanceModelConfig cfg = DanceModelConfig::from_preset(preset, seed_len, total);
  DanceModel model(cfg, seed);

  SynthSpec spec;
  spec.frames = total;
  spec.period = 4;
  spec.clips = 1;
  spec.seed = seed + 17;
  SynthClip clip = make_synth_clip(spec, 0);

  std::mt19937_64 rng(seed + 1);
  auto positions = sample_key_positions(total, seed_len, 2, KeyStrategy::random, rng);
  KeyPoseSet keys = extract_key_poses(clip.motion, positions);
  MotionSequence seed_motion = clip.motion.first_frames(seed_len);
  Tensor ground_truth = clip.motion.to_matrix();
  LossParams loss{3.0, 0.1};

  auto build = [&](Tape& t) {
    Tape::Var pred = model.forward_tape(t, clip.music, seed_motion, keys);
    return weighted_reconstruction_loss(t, pred, ground_truth, positions, loss);
  };
  auto params = model.parameters();
  std::mt19937_64 pick_rng(seed + 2);
  // The ladder spans the usable range on this piecewise-smooth loss: large
  // steps risk crossing a ReLU kink (kinks have shown up within 1e-5 of an
  // init point), while small steps lose f64 signal against the O(100) loss
  // magnitude. Some rung is clean for every coordinate.
  const double ladder[6] = {1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-4};
  return grad_check_multi(build, params, ladder, coords_per_param, pick_rng, 1e-5);
}

}  // namespace keymotion
