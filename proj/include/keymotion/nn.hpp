#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/tape.hpp"
#include "keymotion/tensor.hpp"

namespace keymotion {

// Named handle to a trainable tensor. Registries are built by traversal in a
// fixed order, so parameter iteration is deterministic.
struct Parameter {
  std::string name;
  Tensor* tensor = nullptr;
};

struct LinearLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  LinearLayer() = default;

  LinearLayer(std::size_t out, std::size_t in) : weight({out, in}), bias({out}) {
    weight.requires_grad = true;
    bias.requires_grad = true;
  }

  std::size_t in_dim() const { return weight.shape.at(1); }
  std::size_t out_dim() const { return weight.shape.at(0); }

  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero bias
  void init(std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
    fill_uniform(weight, -bound, bound, rng);
    bias.fill(0.0);
  }

  Tape::Var forward(Tape& t, Tape::Var x) {
    return t.add_rowvec(t.matmul(x, t.transpose(t.leaf(weight))), t.leaf(bias));
  }

  // Eager path, x [r x in] -> [r x out].
  Tensor apply(const Tensor& x) const {
    if (!x.is_matrix() || x.cols() != in_dim())
      throw DimensionError("linear apply: expected [r x " + std::to_string(in_dim()) + "], got " + x.shape_str());
    std::size_t r = x.rows(), in = in_dim(), out = out_dim();
    Tensor y({r, out});
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t o = 0; o < out; ++o) {
        double s = bias.data[o];
        for (std::size_t j = 0; j < in; ++j) s += weight.data[o * in + j] * x.data[i * in + j];
        y.data[i * out + o] = s;
      }
    return y;
  }

  void collect(const std::string& prefix, std::vector<Parameter>& out) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
  }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Moment buffers are keyed by parameter
// order, which must stay stable across steps.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  AdamConfig& config() { return cfg_; }
  std::int64_t step_count() const { return step_; }

  void step(std::span<Parameter> params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].tensor->numel(), 0.0);
        v_[i].assign(params[i].tensor->numel(), 0.0);
      }
    }
    if (m_.size() != params.size()) throw UsageError("adam: parameter set changed between steps");
    ++step_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& t = *params[i].tensor;
      if (t.grad.size() != t.numel())
        throw UsageError("adam: missing grad for parameter " + params[i].name);
      auto& m = m_[i];
      auto& v = v_[i];
      if (m.size() != t.numel()) throw UsageError("adam: moment shape mismatch for " + params[i].name);
      for (std::size_t j = 0; j < t.numel(); ++j) {
        double g = t.grad[j];
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
        double mhat = m[j] / bc1;
        double vhat = v[j] / bc2;
        t.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

inline void zero_grads(std::span<Parameter> params) {
  for (auto& p : params) p.tensor->zero_grad();
}

}  // namespace keymotion
