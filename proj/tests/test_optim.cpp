#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "keymotion/nn.hpp"
#include "keymotion/tape.hpp"

using namespace keymotion;

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
  Tensor p({3});
  p.requires_grad = true;
  p.data = {1.0, -2.0, 0.5};
  p.grad.assign(3, 0.0);
  std::vector<Parameter> params{{"p", &p}};
  Adam adam;
  adam.step(params);
  CHECK(p.data[0] == 1.0);
  CHECK(p.data[1] == -2.0);
  CHECK(p.data[2] == 0.5);
}

TEST_CASE("adam first step moves by about -lr * sign(grad)") {
  Tensor p({2});
  p.requires_grad = true;
  p.data = {0.0, 0.0};
  p.grad = {3.5, -0.2};
  std::vector<Parameter> params{{"p", &p}};
  AdamConfig cfg;
  cfg.lr = 1e-2;
  Adam adam(cfg);
  adam.step(params);
  // bias-corrected first step: -lr * g / (|g| + eps)
  CHECK(p.data[0] == Catch::Approx(-1e-2).epsilon(1e-6));
  CHECK(p.data[1] == Catch::Approx(1e-2).epsilon(1e-6));
}

TEST_CASE("adam matches a scalar simulation and descends a quadratic") {
  // library side: minimize (x - 3)^2 from x = 0
  Tensor p({1});
  p.requires_grad = true;
  p.data = {0.0};
  std::vector<Parameter> params{{"p", &p}};
  AdamConfig cfg;
  cfg.lr = 0.05;
  Adam adam(cfg);

  // oracle side: hand-rolled scalar adam with identical constants
  double x = 0.0, m = 0.0, v = 0.0;
  std::vector<double> losses;
  for (int step = 1; step <= 100; ++step) {
    double g = 2.0 * (x - 3.0);
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    double mhat = m / (1 - std::pow(cfg.beta1, step));
    double vhat = v / (1 - std::pow(cfg.beta2, step));
    x -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);

    p.grad = {2.0 * (p.data[0] - 3.0)};
    adam.step(params);
    losses.push_back((p.data[0] - 3.0) * (p.data[0] - 3.0));
    CHECK(p.data[0] == Catch::Approx(x).margin(1e-12));
  }
  // strictly decreasing after warmup
  for (std::size_t i = 10; i + 1 < losses.size(); ++i) CHECK(losses[i + 1] < losses[i]);
  CHECK(losses.back() < 1e-2);
}

TEST_CASE("adam rejects a missing gradient") {
  Tensor p({2});
  p.requires_grad = true;
  std::vector<Parameter> params{{"p", &p}};
  Adam adam;
  CHECK_THROWS_AS(adam.step(params), UsageError);
}

TEST_CASE("linear layer init is within the fan-in bound and bias is zero") {
  std::mt19937_64 rng(4);
  LinearLayer lin(8, 16);
  lin.init(rng);
  double bound = 1.0 / std::sqrt(16.0);
  for (double w : lin.weight.data) {
    CHECK(w <= bound);
    CHECK(w >= -bound);
  }
  for (double b : lin.bias.data) CHECK(b == 0.0);
}

TEST_CASE("linear eager apply matches the tape path") {
  std::mt19937_64 rng(9);
  LinearLayer lin(5, 7);
  lin.init(rng);
  Tensor x({4, 7});
  fill_uniform(x, -2.0, 2.0, rng);
  Tensor eager = lin.apply(x);
  Tape t;
  Tensor taped = t.value(lin.forward(t, t.constant(x)));
  REQUIRE(eager.numel() == taped.numel());
  for (std::size_t i = 0; i < eager.numel(); ++i)
    CHECK(eager.data[i] == Catch::Approx(taped.data[i]).margin(1e-12));
}
