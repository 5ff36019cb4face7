#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "keymotion/motion.hpp"

using namespace keymotion;

namespace {

MotionSequence zeros_motion(std::size_t frames) { return MotionSequence(frames, 30.0); }

}  // namespace

TEST_CASE("motion sequence basics and validation") {
  CHECK_THROWS_AS(MotionSequence(0, 30.0), ValidationError);
  CHECK_THROWS_AS(MotionSequence(5, 0.0), ValidationError);

  Tensor bad({4, 10});
  CHECK_THROWS_AS(MotionSequence::from_matrix(bad, 30.0), ValidationError);

  MotionSequence m(3, 30.0);
  m.pose(1)[0] = 2.5;
  m.translation(2)[1] = 0.9;
  Tensor mat = m.to_matrix();
  CHECK(mat.at(1, 0) == 2.5);
  CHECK(mat.at(2, 145) == 0.9);
  MotionSequence back = MotionSequence::from_matrix(mat, 30.0);
  CHECK(back.pose(1)[0] == 2.5);
}

TEST_CASE("extract_key_poses: empty, all frames, stride") {
  MotionSequence m(240, 30.0);
  for (std::size_t t = 0; t < 240; ++t) {
    m.pose(t)[0] = static_cast<double>(t);
    m.translation(t)[0] = 100.0 + static_cast<double>(t);  // must be dropped
  }

  CHECK(extract_key_poses(m, {}).empty());

  std::vector<std::size_t> all(240);
  for (std::size_t i = 0; i < 240; ++i) all[i] = i;
  KeyPoseSet keys = extract_key_poses(m, all);
  REQUIRE(keys.size() == 240);
  for (std::size_t i = 0; i < 240; ++i) {
    CHECK(keys[i].frame == i);
    CHECK(keys[i].pose[0] == static_cast<double>(i));
  }

  std::vector<std::size_t> stride;
  for (std::size_t t = 0; t < 240; t += 30) stride.push_back(t);
  KeyPoseSet sparse = extract_key_poses(m, stride);
  REQUIRE(sparse.size() == 8);
  CHECK(sparse[7].frame == 210);
  CHECK(sparse[7].pose[0] == 210.0);

  CHECK_THROWS_AS(extract_key_poses(m, {240}), ValidationError);
  CHECK_THROWS_AS(extract_key_poses(m, {5, 5}), ValidationError);
  CHECK_THROWS_AS(extract_key_poses(m, {7, 3}), ValidationError);
}

TEST_CASE("sample_key_positions: count, range, strategies") {
  std::mt19937_64 rng(1);
  CHECK(sample_key_positions(100, 0, 0, KeyStrategy::uniform, rng).empty());

  auto uniform = sample_key_positions(100, 0, 4, KeyStrategy::uniform, rng);
  REQUIRE(uniform.size() == 4);
  CHECK(uniform == std::vector<std::size_t>{20, 40, 60, 80});

  auto offset = sample_key_positions(120, 40, 3, KeyStrategy::uniform, rng);
  for (std::size_t p : offset) {
    CHECK(p >= 40);
    CHECK(p < 120);
  }

  for (int trial = 0; trial < 20; ++trial) {
    auto random = sample_key_positions(50, 10, 8, KeyStrategy::random, rng);
    REQUIRE(random.size() == 8);
    for (std::size_t i = 0; i < random.size(); ++i) {
      CHECK(random[i] >= 10);
      CHECK(random[i] < 50);
      if (i) CHECK(random[i] > random[i - 1]);
    }
  }

  // seeded determinism
  std::mt19937_64 a(77), b(77);
  CHECK(sample_key_positions(200, 20, 6, KeyStrategy::random, a) ==
        sample_key_positions(200, 20, 6, KeyStrategy::random, b));

  std::vector<std::size_t> beats{40, 80};
  auto aligned = sample_key_positions(100, 0, 2, KeyStrategy::beat_aligned, rng, &beats);
  CHECK(aligned == beats);

  CHECK_THROWS_AS(sample_key_positions(10, 8, 3, KeyStrategy::uniform, rng), ValidationError);
  CHECK_THROWS_AS(sample_key_positions(100, 0, 3, KeyStrategy::beat_aligned, rng, &beats), ValidationError);
}

TEST_CASE("kinetic velocity: frozen, ramp, sinusoid, translation invariance") {
  CHECK_THROWS_AS(kinetic_velocity(zeros_motion(1)), ValidationError);

  MotionSequence frozen = zeros_motion(10);
  for (double v : kinetic_velocity(frozen)) CHECK(v == 0.0);

  MotionSequence ramp = zeros_motion(10);
  for (std::size_t t = 0; t < 10; ++t) ramp.pose(t)[7] = 0.1 * static_cast<double>(t);
  for (double v : kinetic_velocity(ramp)) CHECK(v == Catch::Approx(0.1).epsilon(1e-12));

  // single coordinate sin(2 pi t / P): minima of |pose diff| near pose extrema
  const std::size_t period = 12, frames = 61;
  MotionSequence wave = zeros_motion(frames);
  for (std::size_t t = 0; t < frames; ++t)
    wave.pose(t)[0] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
  std::vector<double> v = kinetic_velocity(wave);
  // velocity repeats with the pose period
  for (std::size_t t = 0; t + period < v.size(); ++t)
    CHECK(v[t] == Catch::Approx(v[t + period]).margin(1e-9));
  // pose extremum at t = 3 (quarter period): the two straddling velocity
  // samples are the local minimum of the series
  double at_extremum = std::min(v[2], v[3]);
  for (std::size_t t = 5; t < 9; ++t) CHECK(at_extremum < v[t]);

  // translation edits do not change the series
  MotionSequence shifted = wave;
  for (std::size_t t = 0; t < frames; ++t) shifted.translation(t)[2] = 5.0 * static_cast<double>(t);
  std::vector<double> v2 = kinetic_velocity(shifted);
  for (std::size_t t = 0; t < v.size(); ++t) CHECK(v[t] == v2[t]);
}
