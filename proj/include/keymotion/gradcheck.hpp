#pragma once

// Central-difference verification of reverse-mode gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "keymotion/nn.hpp"
#include "keymotion/tape.hpp"

namespace keymotion {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_coord;
  std::size_t coords_checked = 0;
};

// Checks up to `coords_per_param` randomly sampled coordinates of each
// parameter against (f(x+eps) - f(x-eps)) / 2eps. `build_loss` must construct
// the scalar loss on the given tape, reading every parameter through
// Tape::leaf so perturbations are visible.
//
// Per coordinate the best agreement across the eps ladder counts: a ReLU kink
// inside one +-eps window corrupts that step size but not smaller ones, and
// f64 roundoff corrupts only the smallest. Coordinates where analytic and
// numeric are both below `atol` count as agreeing; for a structurally zero
// gradient (e.g. the key-projection bias, which shifts every pre-softmax
// logit in a row equally) the central difference measures pure roundoff.
inline GradCheckReport grad_check_multi(const std::function<Tape::Var(Tape&)>& build_loss,
                                        std::span<Parameter> params, std::span<const double> eps_ladder,
                                        std::size_t coords_per_param, std::mt19937_64& rng,
                                        double atol = 1e-6) {
  if (eps_ladder.empty()) throw UsageError("grad_check: need at least one eps");
  zero_grads(params);
  {
    Tape tape;
    Tape::Var loss = build_loss(tape);
    tape.backward(loss);
  }

  auto eval = [&]() -> double {
    Tape tape;
    Tape::Var loss = build_loss(tape);
    double v = tape.value(loss).data[0];
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
    return v;
  };

  GradCheckReport report;
  for (auto& p : params) {
    Tensor& t = *p.tensor;
    if (!t.requires_grad) continue;
    if (t.grad.size() != t.numel()) throw UsageError("grad_check: backward left no grad on " + p.name);

    std::vector<std::size_t> coords(t.numel());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > coords_per_param) {
      for (std::size_t i = 0; i < coords_per_param; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, coords.size() - 1);
        std::swap(coords[i], coords[pick(rng)]);
      }
      coords.resize(coords_per_param);
    }

    for (std::size_t c : coords) {
      double analytic = t.grad[c];
      double best = std::numeric_limits<double>::infinity();
      for (double eps : eps_ladder) {
        double saved = t.data[c];
        t.data[c] = saved + eps;
        double fp = eval();
        t.data[c] = saved - eps;
        double fm = eval();
        t.data[c] = saved;
        double numeric = (fp - fm) / (2.0 * eps);
        double rel;
        if (std::abs(analytic) < atol && std::abs(numeric) < atol) {
          rel = 0.0;
        } else {
          double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
          rel = std::abs(analytic - numeric) / denom;
        }
        best = std::min(best, rel);
        if (best < 1e-7) break;
      }
      ++report.coords_checked;
      if (best > report.max_rel_err) {
        report.max_rel_err = best;
        report.worst_coord = p.name + "[" + std::to_string(c) + "]";
      }
    }
  }
  return report;
}

inline GradCheckReport grad_check(const std::function<Tape::Var(Tape&)>& build_loss,
                                  std::span<Parameter> params, double eps,
                                  std::size_t coords_per_param, std::mt19937_64& rng,
                                  double atol = 1e-6) {
  const double ladder[1] = {eps};
  return grad_check_multi(build_loss, params, std::span<const double>(ladder, 1), coords_per_param, rng,
                          atol);
}

}  // namespace keymotion
