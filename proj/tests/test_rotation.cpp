#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "keymotion/rotation.hpp"

using namespace keymotion;

TEST_CASE("identity encodes to [1,0,0, 0,1,0]") {
  SixD v = rotmat_to_6d(identity3());
  CHECK(v == SixD{1, 0, 0, 0, 1, 0});
}

TEST_CASE("90 degree z rotation encodes to its first two columns") {
  Mat3 rz = axis_angle({0, 0, 1}, std::numbers::pi / 2);
  SixD v = rotmat_to_6d(rz);
  CHECK(v[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(v[1] == Catch::Approx(1.0).margin(1e-12));
  CHECK(v[2] == Catch::Approx(0.0).margin(1e-12));
  CHECK(v[3] == Catch::Approx(-1.0).margin(1e-12));
  CHECK(v[4] == Catch::Approx(0.0).margin(1e-12));
  CHECK(v[5] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("6d decode: identity, scale invariance, collinear rejection") {
  Mat3 eye = sixd_to_rotmat({1, 0, 0, 0, 1, 0});
  for (int i = 0; i < 9; ++i) CHECK(eye[i] == Catch::Approx(identity3()[i]).margin(1e-12));

  // Gram-Schmidt normalizes away positive scaling
  Mat3 scaled = sixd_to_rotmat({2, 0, 0, 0, 3, 0});
  for (int i = 0; i < 9; ++i) CHECK(scaled[i] == Catch::Approx(identity3()[i]).margin(1e-12));

  CHECK_THROWS_AS(sixd_to_rotmat({1, 0, 0, 2, 0, 0}), ValidationError);
  CHECK_THROWS_AS(sixd_to_rotmat({0, 0, 0, 0, 1, 0}), ValidationError);
}

TEST_CASE("non-rotation input to the encoder is rejected") {
  Mat3 skewed = identity3();
  skewed[1] = 0.3;
  CHECK_THROWS_AS(rotmat_to_6d(skewed), ValidationError);
  Mat3 reflected = identity3();
  reflected[8] = -1.0;  // det = -1
  CHECK_THROWS_AS(rotmat_to_6d(reflected), ValidationError);
}

TEST_CASE("random rotations round-trip through 6d within 1e-9") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 200; ++trial) {
    Mat3 r = random_rotation(rng);
    Mat3 back = sixd_to_rotmat(rotmat_to_6d(r));
    for (int i = 0; i < 9; ++i) CHECK(std::abs(back[i] - r[i]) < 1e-9);
  }
}

TEST_CASE("decoded matrices are orthonormal with det +1") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    SixD v;
    for (auto& x : v) x = unit(rng);
    Mat3 r;
    try {
      r = sixd_to_rotmat(v);
    } catch (const ValidationError&) {
      continue;  // degenerate draw
    }
    CHECK(is_rotation(r, 1e-9));
    CHECK(std::abs(det3(r) - 1.0) < 1e-9);
    // third column is the cross product of the first two
    Vec3 c1{r[0], r[3], r[6]}, c2{r[1], r[4], r[7]};
    Vec3 c3 = cross3(c1, c2);
    CHECK(std::abs(c3[0] - r[2]) < 1e-12);
    CHECK(std::abs(c3[1] - r[5]) < 1e-12);
    CHECK(std::abs(c3[2] - r[8]) < 1e-12);
  }
}

TEST_CASE("encode of a decode is identity up to rescaling") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    SixD v;
    for (auto& x : v) x = unit(rng);
    Mat3 r;
    try {
      r = sixd_to_rotmat(v);
    } catch (const ValidationError&) {
      continue;
    }
    SixD w = rotmat_to_6d(r);
    Mat3 r2 = sixd_to_rotmat(w);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(r2[i] - r[i]) < 1e-12);
  }
}
