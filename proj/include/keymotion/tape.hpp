#pragma once

// Reverse-mode differentiation over a linear tape of recorded operations.
//
// Each op appends one node holding the output value, the input node ids, and
// a closure that scatters the output gradient back to the inputs. Nodes are
// in topological order by construction, so backward() is a single reverse
// sweep. A tape is single-use: after backward() it is consumed and rejects
// further ops or replays. Every op output is checked finite; a NaN/Inf is a
// NumericError, not a silent propagation.
//
// Leaves reference caller-owned Tensors. backward() accumulates into
// Tensor::grad of every requires_grad leaf, so parameters keep their grads
// after the tape is gone.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/tensor.hpp"

namespace keymotion {

class Tape {
 public:
  using Var = std::int32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  // Gradient of the loss w.r.t. an intermediate node; valid after backward().
  const std::vector<double>& grad(Var v) const {
    const Node& n = node(v);
    if (!consumed_) throw UsageError("grad: tape has not run backward yet");
    if (n.grad.empty()) throw UsageError("grad: node does not require grad");
    return n.grad;
  }

  // Leaf over a caller-owned tensor. Repeated calls with the same tensor
  // return the same node. The tensor must outlive the tape.
  Var leaf(Tensor& t) {
    auto it = leaf_ids_.find(&t);
    if (it != leaf_ids_.end()) return it->second;
    Var v = push(t, {}, "leaf", nullptr, t.requires_grad);
    nodes_[static_cast<std::size_t>(v)].leaf_target = &t;
    leaf_ids_.emplace(&t, v);
    return v;
  }

  // Non-differentiable node owned by the tape.
  Var constant(Tensor t) { return push(std::move(t), {}, "constant", nullptr, false); }

  Var add(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_same_shape(x, y, "add");
    Tensor out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += y.data[i];
    return push(std::move(out), {a, b}, "add", [a, b](Tape& t, const Node& n) {
      t.accumulate(a, n.grad, 1.0);
      t.accumulate(b, n.grad, 1.0);
    });
  }

  Var sub(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_same_shape(x, y, "sub");
    Tensor out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= y.data[i];
    return push(std::move(out), {a, b}, "sub", [a, b](Tape& t, const Node& n) {
      t.accumulate(a, n.grad, 1.0);
      t.accumulate(b, n.grad, -1.0);
    });
  }

  // Elementwise product.
  Var mul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_same_shape(x, y, "mul");
    Tensor out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= y.data[i];
    return push(std::move(out), {a, b}, "mul", [a, b](Tape& t, const Node& n) {
      const auto& xv = t.value(a).data;
      const auto& yv = t.value(b).data;
      if (t.node(a).requires_grad) {
        auto& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * yv[i];
      }
      if (t.node(b).requires_grad) {
        auto& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < n.grad.size(); ++i) gb[i] += n.grad[i] * xv[i];
      }
    });
  }

  Var scale(Var a, double c) {
    Tensor out = value(a);
    for (auto& v : out.data) v *= c;
    return push(std::move(out), {a}, "scale", [a, c](Tape& t, const Node& n) {
      t.accumulate(a, n.grad, c);
    });
  }

  Var log(Var a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = std::log(v);
    return push(std::move(out), {a}, "log", [a](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      const auto& xv = t.value(a).data;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] / xv[i];
    });
  }

  Var relu(Var a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), {a}, "relu", [a](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      const auto& xv = t.value(a).data;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        if (xv[i] > 0.0) ga[i] += n.grad[i];
    });
  }

  // x [r x c] plus a length-c vector broadcast over rows.
  Var add_rowvec(Var x, Var b) {
    const Tensor& xv = value(x);
    const Tensor& bv = value(b);
    if (!xv.is_matrix() || !bv.is_vector() || bv.shape[0] != xv.cols())
      throw DimensionError("add_rowvec: need [r x c] and [c], got " + xv.shape_str() + " and " + bv.shape_str());
    Tensor out = xv;
    std::size_t r = xv.rows(), c = xv.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += bv.data[j];
    return push(std::move(out), {x, b}, "add_rowvec", [x, b, r, c](Tape& t, const Node& n) {
      t.accumulate(x, n.grad, 1.0);
      if (t.node(b).requires_grad) {
        auto& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gb[j] += n.grad[i * c + j];
      }
    });
  }

  Var matmul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (!x.is_matrix() || !y.is_matrix())
      throw DimensionError("matmul: operands must be 2-D, got " + x.shape_str() + " and " + y.shape_str());
    if (x.cols() != y.rows())
      throw DimensionError("matmul: inner dims differ, " + x.shape_str() + " x " + y.shape_str());
    std::size_t m = x.rows(), k = x.cols(), n = y.cols();
    Tensor out({m, n});
    matmul_into(out.data, x.data, y.data, m, k, n);
    return push(std::move(out), {a, b}, "matmul", [a, b, m, k, n](Tape& t, const Node& nd) {
      const auto& xv = t.value(a).data;
      const auto& yv = t.value(b).data;
      // dA[i,p] = <grad row i, B row p>
      if (t.node(a).requires_grad) {
        auto& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = &nd.grad[i * n];
          double* garow = &ga[i * k];
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = &yv[p * n];
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += grow[j] * brow[j];
            garow[p] += dot;
          }
        }
      }
      // dB = A^T . g  ([k x m] . [m x n])
      if (t.node(b).requires_grad) {
        auto& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < m; ++i) {
          const double* arow = &xv[i * k];
          const double* grow = &nd.grad[i * n];
          for (std::size_t p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            double* gbrow = &gb[p * n];
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
          }
        }
      }
    });
  }

  Var transpose(Var a) {
    const Tensor& x = value(a);
    if (!x.is_matrix()) throw DimensionError("transpose: operand must be 2-D, got " + x.shape_str());
    std::size_t r = x.rows(), c = x.cols();
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.data[j * r + i] = x.data[i * c + j];
    return push(std::move(out), {a}, "transpose", [a, r, c](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += n.grad[j * r + i];
    });
  }

  // Row-wise softmax with max-subtraction. `allow`, when given, is a row-major
  // [r x c] byte mask; disallowed entries get weight exactly 0. A row with no
  // allowed entry is a validation error.
  Var softmax_rows(Var a, const std::uint8_t* allow = nullptr) {
    const Tensor& x = value(a);
    if (!x.is_matrix()) throw DimensionError("softmax_rows: operand must be 2-D, got " + x.shape_str());
    std::size_t r = x.rows(), c = x.cols();
    if (c == 0) throw DimensionError("softmax_rows: empty rows");
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
      const double* xi = &x.data[i * c];
      double* oi = &out.data[i * c];
      double mx = 0.0;
      bool any = false;
      for (std::size_t j = 0; j < c; ++j) {
        if (allow && !allow[i * c + j]) continue;
        if (!any || xi[j] > mx) mx = xi[j];
        any = true;
      }
      if (!any) throw ValidationError("softmax_rows: row " + std::to_string(i) + " is fully masked");
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        double e = (allow && !allow[i * c + j]) ? 0.0 : std::exp(xi[j] - mx);
        oi[j] = e;
        sum += e;
      }
      for (std::size_t j = 0; j < c; ++j) oi[j] /= sum;
    }
    return push(std::move(out), {a}, "softmax_rows", [a, r, c](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      const auto& y = n.value.data;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < r; ++i) {
        const double* yi = &y[i * c];
        const double* gi = &n.grad[i * c];
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += gi[j] * yi[j];
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += yi[j] * (gi[j] - dot);
      }
    });
  }

  // Per-row normalization to zero mean / unit population variance, then an
  // elementwise affine with length-c gain and bias vectors.
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
    const Tensor& xv = value(x);
    const Tensor& gv = value(gain);
    const Tensor& bv = value(bias);
    if (!xv.is_matrix()) throw DimensionError("layer_norm: input must be 2-D, got " + xv.shape_str());
    std::size_t r = xv.rows(), c = xv.cols();
    if (c < 2) throw DimensionError("layer_norm: need at least 2 columns");
    if (!gv.is_vector() || gv.shape[0] != c || !bv.is_vector() || bv.shape[0] != c)
      throw DimensionError("layer_norm: gain/bias must be length-" + std::to_string(c) + " vectors");

    Tensor out({r, c});
    auto xhat = std::make_shared<std::vector<double>>(r * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    for (std::size_t i = 0; i < r; ++i) {
      const double* xi = &xv.data[i * c];
      double mean = 0.0;
      for (std::size_t j = 0; j < c; ++j) mean += xi[j];
      mean /= static_cast<double>(c);
      double var = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        double d = xi[j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(c);
      double inv = 1.0 / std::sqrt(var + eps);
      (*inv_std)[i] = inv;
      for (std::size_t j = 0; j < c; ++j) {
        double h = (xi[j] - mean) * inv;
        (*xhat)[i * c + j] = h;
        out.data[i * c + j] = gv.data[j] * h + bv.data[j];
      }
    }
    return push(std::move(out), {x, gain, bias}, "layer_norm",
                [x, gain, bias, r, c, xhat, inv_std](Tape& t, const Node& n) {
                  const auto& gv = t.value(gain).data;
                  bool need_x = t.node(x).requires_grad;
                  bool need_g = t.node(gain).requires_grad;
                  bool need_b = t.node(bias).requires_grad;
                  for (std::size_t i = 0; i < r; ++i) {
                    const double* gi = &n.grad[i * c];
                    const double* hi = &(*xhat)[i * c];
                    if (need_g) {
                      auto& gg = t.grad_buf(gain);
                      for (std::size_t j = 0; j < c; ++j) gg[j] += gi[j] * hi[j];
                    }
                    if (need_b) {
                      auto& gb = t.grad_buf(bias);
                      for (std::size_t j = 0; j < c; ++j) gb[j] += gi[j];
                    }
                    if (need_x) {
                      auto& gx = t.grad_buf(x);
                      double mean_dh = 0.0, mean_dh_h = 0.0;
                      for (std::size_t j = 0; j < c; ++j) {
                        double dh = gi[j] * gv[j];
                        mean_dh += dh;
                        mean_dh_h += dh * hi[j];
                      }
                      mean_dh /= static_cast<double>(c);
                      mean_dh_h /= static_cast<double>(c);
                      double inv = (*inv_std)[i];
                      for (std::size_t j = 0; j < c; ++j) {
                        double dh = gi[j] * gv[j];
                        gx[i * c + j] += inv * (dh - mean_dh - hi[j] * mean_dh_h);
                      }
                    }
                  }
                });
  }

  // Stack matrices along the row (time) axis.
  Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    std::size_t c = value(parts[0]).cols();
    std::size_t total = 0;
    for (Var p : parts) {
      const Tensor& t = value(p);
      if (!t.is_matrix() || t.cols() != c)
        throw DimensionError("concat_rows: column mismatch at " + t.shape_str());
      total += t.rows();
    }
    Tensor out({total, c});
    std::size_t row = 0;
    std::vector<std::size_t> offsets;
    std::vector<Var> inputs(parts.begin(), parts.end());
    for (Var p : parts) {
      const Tensor& t = value(p);
      offsets.push_back(row);
      std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(row * c));
      row += t.rows();
    }
    return push(std::move(out), inputs, "concat_rows",
                [inputs, offsets, c](Tape& t, const Node& n) {
                  for (std::size_t k = 0; k < inputs.size(); ++k) {
                    Var p = inputs[k];
                    if (!t.node(p).requires_grad) continue;
                    std::size_t rows = t.value(p).rows();
                    auto& gp = t.grad_buf(p);
                    const double* src = &n.grad[offsets[k] * c];
                    for (std::size_t i = 0; i < rows * c; ++i) gp[i] += src[i];
                  }
                });
  }

  Var concat_rows(Var a, Var b) {
    const Var parts[2] = {a, b};
    return concat_rows(std::span<const Var>(parts, 2));
  }

  // Stack matrices along the column axis (same row count).
  Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    std::size_t r = value(parts[0]).rows();
    std::size_t total = 0;
    for (Var p : parts) {
      const Tensor& t = value(p);
      if (!t.is_matrix() || t.rows() != r)
        throw DimensionError("concat_cols: row mismatch at " + t.shape_str());
      total += t.cols();
    }
    Tensor out({r, total});
    std::vector<std::size_t> offsets;
    std::vector<Var> inputs(parts.begin(), parts.end());
    std::size_t col = 0;
    for (Var p : parts) {
      const Tensor& t = value(p);
      std::size_t c = t.cols();
      offsets.push_back(col);
      for (std::size_t i = 0; i < r; ++i)
        std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(i * c),
                  t.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * c),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * total + col));
      col += c;
    }
    return push(std::move(out), inputs, "concat_cols",
                [inputs, offsets, r, total](Tape& t, const Node& n) {
                  for (std::size_t k = 0; k < inputs.size(); ++k) {
                    Var p = inputs[k];
                    if (!t.node(p).requires_grad) continue;
                    std::size_t c = t.value(p).cols();
                    auto& gp = t.grad_buf(p);
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j)
                        gp[i * c + j] += n.grad[i * total + offsets[k] + j];
                  }
                });
  }

  // Rows [r0, r1) of x.
  Var slice_rows(Var a, std::size_t r0, std::size_t r1) {
    const Tensor& x = value(a);
    if (!x.is_matrix()) throw DimensionError("slice_rows: operand must be 2-D");
    if (r0 >= r1 || r1 > x.rows())
      throw DimensionError("slice_rows: bad range [" + std::to_string(r0) + "," + std::to_string(r1) +
                           ") for " + x.shape_str());
    std::size_t c = x.cols();
    Tensor out({r1 - r0, c});
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(r0 * c),
              x.data.begin() + static_cast<std::ptrdiff_t>(r1 * c), out.data.begin());
    return push(std::move(out), {a}, "slice_rows", [a, r0, r1, c](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < (r1 - r0) * c; ++i) ga[r0 * c + i] += n.grad[i];
    });
  }

  // Place row i of x at row rows[i] of a zero [out_rows x c] matrix.
  Var scatter_rows(Var a, const std::vector<std::size_t>& rows, std::size_t out_rows) {
    const Tensor& x = value(a);
    if (!x.is_matrix()) throw DimensionError("scatter_rows: operand must be 2-D");
    if (rows.size() != x.rows()) throw DimensionError("scatter_rows: row-index count mismatch");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] >= out_rows) throw ValidationError("scatter_rows: target row out of range");
      if (i > 0 && rows[i] <= rows[i - 1]) throw ValidationError("scatter_rows: target rows must be strictly increasing");
    }
    std::size_t c = x.cols();
    Tensor out({out_rows, c});
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(i * c),
                x.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * c),
                out.data.begin() + static_cast<std::ptrdiff_t>(rows[i] * c));
    auto idx = std::make_shared<std::vector<std::size_t>>(rows);
    return push(std::move(out), {a}, "scatter_rows", [a, idx, c](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < idx->size(); ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += n.grad[(*idx)[i] * c + j];
    });
  }

  // Multiply row t of x by weights[t]. The weights are constants.
  Var scale_rows(Var a, const Tensor& weights) {
    const Tensor& x = value(a);
    if (!x.is_matrix()) throw DimensionError("scale_rows: operand must be 2-D");
    if (!weights.is_vector() || weights.shape[0] != x.rows())
      throw DimensionError("scale_rows: weights must be a length-" + std::to_string(x.rows()) + " vector");
    std::size_t r = x.rows(), c = x.cols();
    Tensor out = x;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] *= weights.data[i];
    auto w = std::make_shared<std::vector<double>>(weights.data);
    return push(std::move(out), {a}, "scale_rows", [a, w, r, c](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      auto& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += n.grad[i * c + j] * (*w)[i];
    });
  }

  Var sum_all(Var a) {
    const Tensor& x = value(a);
    double s = 0.0;
    for (double v : x.data) s += v;
    return push(Tensor::scalar(s), {a}, "sum_all", [a](Tape& t, const Node& n) {
      if (!t.node(a).requires_grad) return;
      auto& ga = t.grad_buf(a);
      double g = n.grad[0];
      for (auto& v : ga) v += g;
    });
  }

  // Runs the reverse sweep from a scalar loss, accumulating into Tensor::grad
  // of every requires_grad leaf. Single use per tape.
  void backward(Var loss) {
    if (consumed_) throw UsageError("backward: tape already consumed");
    const Node& ln = node(loss);
    if (!ln.value.is_scalar()) throw UsageError("backward: loss must be scalar, got " + ln.value.shape_str());
    if (!ln.requires_grad) throw UsageError("backward: loss is detached (no grad-requiring inputs)");
    consumed_ = true;

    for (auto& n : nodes_)
      if (n.requires_grad) n.grad.assign(n.value.numel(), 0.0);
    nodes_[static_cast<std::size_t>(loss)].grad[0] = 1.0;

    for (std::int32_t id = loss; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || !n.backward) continue;
      n.backward(*this, n);
    }

    for (auto& n : nodes_) {
      if (!n.leaf_target || !n.requires_grad) continue;
      Tensor& t = *n.leaf_target;
      if (t.grad.empty()) t.grad.assign(t.numel(), 0.0);
      if (t.grad.size() != t.numel()) throw DimensionError("backward: stale grad buffer on leaf");
      for (std::size_t i = 0; i < t.numel(); ++i) {
        t.grad[i] += n.grad[i];
        if (!std::isfinite(t.grad[i])) throw NumericError("backward: non-finite gradient on a leaf");
      }
    }
  }

  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<double> grad;
    std::function<void(Tape&, const Node&)> backward;
    Tensor* leaf_target = nullptr;
    const char* op = "";
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, Var> leaf_ids_;
  bool consumed_ = false;

  Node& node(Var v) {
    if (v < 0 || static_cast<std::size_t>(v) >= nodes_.size())
      throw UsageError("tape: variable does not belong to this tape");
    return nodes_[static_cast<std::size_t>(v)];
  }
  const Node& node(Var v) const { return const_cast<Tape*>(this)->node(v); }

  std::vector<double>& grad_buf(Var v) { return node(v).grad; }

  void accumulate(Var v, const std::vector<double>& g, double factor) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    auto& buf = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += factor * g[i];
  }

  Var push(Tensor value, std::vector<Var> inputs, const char* op,
           std::function<void(Tape&, const Node&)> bw, bool force_rg = false) {
    if (consumed_) throw UsageError("tape: cannot record ops on a consumed tape");
    if (!value.all_finite())
      throw NumericError(std::string("op '") + op + "' produced a non-finite value");
    bool rg = force_rg;
    for (Var in : inputs) rg = rg || node(in).requires_grad;
    Node n;
    n.value = std::move(value);
    n.requires_grad = rg;
    n.backward = std::move(bw);
    n.op = op;
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
  }

  static void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b))
      throw DimensionError(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }

  static void matmul_into(std::vector<double>& out, const std::vector<double>& a,
                          const std::vector<double>& b, std::size_t m, std::size_t k, std::size_t n) {
    // ikj order keeps the inner loop contiguous in both b and out.
    for (std::size_t i = 0; i < m; ++i) {
      double* orow = &out[i * n];
      for (std::size_t p = 0; p < k; ++p) {
        double av = a[i * k + p];
        if (av == 0.0) continue;
        const double* brow = &b[p * n];
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  }
};

}  // namespace keymotion
