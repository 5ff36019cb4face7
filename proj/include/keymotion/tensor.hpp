#pragma once

// Dense row-major f64 buffer with shape bookkeeping. All differentiable math
// lives in tape.hpp; this type is shared plain storage for values and grads.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "keymotion/errors.hpp"

namespace keymotion {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // filled by Tape::backward for leaves, else empty
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(count(shape), 0.0);
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor({r, c}); }

  static Tensor vec(std::size_t n) { return Tensor({n}); }

  static Tensor scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  static Tensor from_rows(std::size_t r, std::size_t c, std::initializer_list<double> vals) {
    Tensor t({r, c});
    if (vals.size() != t.numel()) throw DimensionError("from_rows: value count does not match shape");
    std::size_t i = 0;
    for (double v : vals) t.data[i++] = v;
    return t;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }

  bool is_matrix() const { return shape.size() == 2; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_scalar() const { return numel() == 1; }

  std::size_t rows() const {
    require_matrix("rows");
    return shape[0];
  }
  std::size_t cols() const {
    require_matrix("cols");
    return shape[1];
  }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }

  double& at(std::size_t r, std::size_t c) {
    require_matrix("at(r,c)");
    return data[r * shape[1] + c];
  }
  double at(std::size_t r, std::size_t c) const {
    require_matrix("at(r,c)");
    return data[r * shape[1] + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) {
    for (auto& x : data) x = v;
  }

  void zero_grad() { grad.clear(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << 'x';
      os << shape[i];
    }
    os << ']';
    return os.str();
  }

 private:
  void require_matrix(const char* who) const {
    if (shape.size() != 2) throw DimensionError(std::string(who) + ": tensor is not 2-D " + shape_str());
  }
};

inline void fill_uniform(Tensor& t, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data) v = dist(rng);
}

inline void fill_normal(Tensor& t, double mean, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(mean, stddev);
  for (auto& v : t.data) v = dist(rng);
}

}  // namespace keymotion
