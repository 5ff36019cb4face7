#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "keymotion/diagnostics.hpp"
#include "keymotion/tape.hpp"
#include "keymotion/tensor.hpp"

using namespace keymotion;

namespace {

// straight triple-loop oracle, independent of the tape implementation
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  return out;
}

Tensor tape_matmul(const Tensor& a, const Tensor& b) {
  Tape t;
  Tensor ta = a, tb = b;
  return t.value(t.matmul(t.leaf(ta), t.leaf(tb)));
}

}  // namespace

TEST_CASE("matmul identity and zero cases") {
  Tensor a = Tensor::from_rows(3, 3, {2, -1, 0.5, 3, 4, -2, 0, 1, 7});
  Tensor eye = Tensor::from_rows(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor prod = tape_matmul(eye, a);
  for (std::size_t i = 0; i < 9; ++i) CHECK(prod.data[i] == a.data[i]);

  Tensor one = Tensor::from_rows(1, 1, {1});
  Tensor zero = Tensor::from_rows(1, 1, {0});
  CHECK(tape_matmul(one, zero).data[0] == 0.0);
}

TEST_CASE("matmul hand example [[1,2],[3,4]] x [[5],[6]]") {
  Tensor a = Tensor::from_rows(2, 2, {1, 2, 3, 4});
  Tensor b = Tensor::from_rows(2, 1, {5, 6});
  Tensor got = tape_matmul(a, b);
  Tensor want = matmul_oracle(a, b);
  CHECK(got.at(0, 0) == 17.0);
  CHECK(got.at(1, 0) == 39.0);
  CHECK(got.at(0, 0) == want.at(0, 0));
  CHECK(got.at(1, 0) == want.at(1, 0));
}

TEST_CASE("matmul associativity on random 4x4 triples") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a({4, 4}), b({4, 4}), c({4, 4});
    fill_uniform(a, -2.0, 2.0, rng);
    fill_uniform(b, -2.0, 2.0, rng);
    fill_uniform(c, -2.0, 2.0, rng);
    Tensor left = matmul_oracle(matmul_oracle(a, b), c);
    Tensor right = matmul_oracle(a, matmul_oracle(b, c));
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(left.data[i] - right.data[i]) < 1e-10);

    Tensor tape_left = tape_matmul(tape_matmul(a, b), c);
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(tape_left.data[i] - left.data[i]) < 1e-12);
  }
}

TEST_CASE("matmul shape mismatch is a dimension error") {
  Tape t;
  Tensor a({2, 3}), b({2, 3});
  CHECK_THROWS_AS(t.matmul(t.leaf(a), t.leaf(b)), DimensionError);
}

TEST_CASE("softmax rows: uniform, single element, exp ratio") {
  Tape t;
  Tensor x = Tensor::from_rows(1, 4, {0.7, 0.7, 0.7, 0.7});
  Tensor y = t.value(t.softmax_rows(t.leaf(x)));
  for (std::size_t j = 0; j < 4; ++j) CHECK(y.at(0, j) == Catch::Approx(0.25).epsilon(1e-12));

  Tape t2;
  Tensor single = Tensor::from_rows(1, 1, {123.0});
  CHECK(t2.value(t2.softmax_rows(t2.leaf(single))).data[0] == 1.0);

  // row [0, ln 2] -> [1/3, 2/3]
  Tape t3;
  Tensor pair = Tensor::from_rows(1, 2, {0.0, std::log(2.0)});
  Tensor out = t3.value(t3.softmax_rows(t3.leaf(pair)));
  CHECK(out.at(0, 0) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(out.at(0, 1) == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to 1 and are shift invariant") {
  std::mt19937_64 rng(7);
  Tensor x({5, 9});
  fill_uniform(x, -4.0, 4.0, rng);
  Tape t;
  Tensor y = t.value(t.softmax_rows(t.leaf(x)));
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 9; ++j) sum += y.at(i, j);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  Tensor shifted = x;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 9; ++j) shifted.at(i, j) += 17.5;
  Tape t2;
  Tensor y2 = t2.value(t2.softmax_rows(t2.leaf(shifted)));
  for (std::size_t i = 0; i < y.numel(); ++i) CHECK(std::abs(y.data[i] - y2.data[i]) < 1e-12);
}

TEST_CASE("layer norm: constant row, [1,-1] row, zero-mean property") {
  Tensor gain({4}), bias({4});
  gain.fill(1.0);
  {
    Tape t;
    Tensor x = Tensor::from_rows(1, 4, {3.3, 3.3, 3.3, 3.3});
    Tensor y = t.value(t.layer_norm(t.leaf(x), t.leaf(gain), t.leaf(bias)));
    for (double v : y.data) CHECK(std::abs(v) < 1e-9);
  }
  {
    Tape t;
    Tensor gain2({2}), bias2({2});
    gain2.fill(1.0);
    Tensor x = Tensor::from_rows(1, 2, {1.0, -1.0});
    Tensor y = t.value(t.layer_norm(t.leaf(x), t.leaf(gain2), t.leaf(bias2)));
    CHECK(y.at(0, 0) == Catch::Approx(1.0).margin(1e-5));
    CHECK(y.at(0, 1) == Catch::Approx(-1.0).margin(1e-5));
  }
  {
    std::mt19937_64 rng(3);
    Tensor x({6, 4});
    fill_uniform(x, -5.0, 5.0, rng);
    Tape t;
    Tensor y = t.value(t.layer_norm(t.leaf(x), t.leaf(gain), t.leaf(bias)));
    for (std::size_t i = 0; i < 6; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < 4; ++j) mean += y.at(i, j);
      CHECK(std::abs(mean / 4.0) < 1e-10);
    }
  }
}

TEST_CASE("backward trivials: sum and x.x") {
  {
    Tensor x({3, 2});
    x.requires_grad = true;
    x.fill(0.5);
    Tape t;
    t.backward(t.sum_all(t.leaf(x)));
    REQUIRE(x.grad.size() == 6);
    for (double g : x.grad) CHECK(g == 1.0);
  }
  {
    Tensor x = Tensor::from_rows(1, 3, {1.0, -2.0, 0.5});
    x.requires_grad = true;
    Tape t;
    Tape::Var v = t.leaf(x);
    t.backward(t.sum_all(t.mul(v, v)));
    REQUIRE(x.grad.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad[i] == Catch::Approx(2.0 * x.data[i]).epsilon(1e-14));
  }
}

TEST_CASE("two-layer network gradients match central differences") {
  std::mt19937_64 rng(11);
  LinearLayer l1(5, 4), l2(1, 5);
  l1.init(rng);
  l2.init(rng);
  Tensor x({3, 4});
  fill_uniform(x, -1.0, 1.0, rng);

  std::vector<Parameter> params;
  l1.collect("l1", params);
  l2.collect("l2", params);
  auto build = [&](Tape& t) {
    Tape::Var h = t.relu(l1.forward(t, t.constant(x)));
    Tape::Var out = l2.forward(t, h);
    return t.sum_all(t.mul(out, out));
  };
  GradCheckReport r = grad_check(build, params, 1e-5, 64, rng);
  CHECK(r.coords_checked > 20);
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("grad_check on a quadratic form is nearly exact") {
  std::mt19937_64 rng(5);
  Tensor x({1, 6});
  x.requires_grad = true;
  fill_uniform(x, -1.0, 1.0, rng);
  Tensor a({6, 6});
  fill_uniform(a, -1.0, 1.0, rng);
  std::vector<Parameter> params{{"x", &x}};
  auto build = [&](Tape& t) {
    Tape::Var xv = t.leaf(x);
    return t.sum_all(t.matmul(t.matmul(xv, t.constant(a)), t.transpose(xv)));
  };
  GradCheckReport r = grad_check(build, params, 1e-5, 64, rng);
  CHECK(r.max_rel_err < 1e-8);
}

TEST_CASE("grad_check on softmax cross-entropy toy") {
  std::mt19937_64 rng(6);
  Tensor logits({4, 5});
  logits.requires_grad = true;
  fill_uniform(logits, -1.5, 1.5, rng);
  Tensor target({4, 5});
  for (std::size_t i = 0; i < 4; ++i) target.at(i, i % 5) = 1.0;
  std::vector<Parameter> params{{"logits", &logits}};
  auto build = [&](Tape& t) {
    Tape::Var p = t.softmax_rows(t.leaf(logits));
    return t.scale(t.sum_all(t.mul(t.log(p), t.constant(target))), -1.0);
  };
  GradCheckReport r = grad_check(build, params, 1e-5, 64, rng);
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("per-op gradient checks all pass at 1e-6") {
  for (const auto& check : op_gradcheck_suite(123)) {
    INFO(check.name);
    CHECK(check.max_rel_err < 1e-6);
  }
}

TEST_CASE("tape is single use and rejects detached backward") {
  Tensor x({2, 2});
  x.requires_grad = true;
  x.fill(1.0);
  Tape t;
  Tape::Var loss = t.sum_all(t.leaf(x));
  t.backward(loss);
  CHECK_THROWS_AS(t.backward(loss), UsageError);

  Tape t2;
  Tensor c({2, 2});
  Tape::Var detached = t2.sum_all(t2.constant(c));
  CHECK_THROWS_AS(t2.backward(detached), UsageError);

  // non-scalar loss is a usage error
  Tape t3;
  CHECK_THROWS_AS(t3.backward(t3.leaf(x)), UsageError);
}

TEST_CASE("ops on a consumed tape are rejected") {
  Tensor x({2, 2});
  x.requires_grad = true;
  x.fill(1.0);
  Tape t;
  Tape::Var v = t.leaf(x);
  t.backward(t.sum_all(v));
  CHECK_THROWS_AS(t.scale(v, 2.0), UsageError);
}

TEST_CASE("non-finite op outputs are numeric errors") {
  Tape t;
  Tensor x = Tensor::from_rows(1, 2, {-1.0, 2.0});
  CHECK_THROWS_AS(t.log(t.leaf(x)), NumericError);
  Tape t2;
  Tensor big = Tensor::from_rows(1, 2, {1e308, 1e308});
  CHECK_THROWS_AS(t2.add(t2.leaf(big), t2.leaf(big)), NumericError);
}

TEST_CASE("forward results are bit-identical across runs") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tensor a({6, 6}), b({6, 6});
    fill_uniform(a, -1.0, 1.0, rng);
    fill_uniform(b, -1.0, 1.0, rng);
    Tape t;
    Tensor g({6}), bias({6});
    g.fill(1.0);
    return t.value(t.layer_norm(t.softmax_rows(t.matmul(t.leaf(a), t.leaf(b))), t.leaf(g), t.leaf(bias)));
  };
  Tensor r1 = run(), r2 = run();
  REQUIRE(r1.numel() == r2.numel());
  for (std::size_t i = 0; i < r1.numel(); ++i) CHECK(r1.data[i] == r2.data[i]);
}

TEST_CASE("fully masked softmax row is a validation error") {
  Tape t;
  Tensor x({2, 2});
  std::vector<std::uint8_t> allow{1, 1, 0, 0};  // second row fully masked
  CHECK_THROWS_AS(t.softmax_rows(t.leaf(x), allow.data()), ValidationError);
}
