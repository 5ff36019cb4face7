#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "keymotion/conditioning.hpp"

using namespace keymotion;

namespace {

KeyPose make_key(std::size_t frame, double fill = 0.5) {
  KeyPose k;
  k.frame = frame;
  k.pose.fill(fill);
  return k;
}

LinearLayer random_embed(std::size_t d, std::uint64_t seed) {
  LinearLayer l(d, kPoseDim);
  std::mt19937_64 rng(seed);
  l.init(rng);
  fill_uniform(l.bias, -0.5, 0.5, rng);
  return l;
}

std::size_t nonzero_rows(const Tensor& m) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < m.cols(); ++j) any = any || m.at(i, j) != 0.0;
    count += any;
  }
  return count;
}

}  // namespace

TEST_CASE("key-pose embedding: empty set gives all zeros") {
  LinearLayer embed = random_embed(16, 1);
  KeyPoseEmbedding e = embed_key_poses({}, 40, 8, embed);
  CHECK(e.rows.rows() == 40);
  CHECK(e.rows.cols() == 16);
  CHECK(nonzero_rows(e.rows) == 0);
  CHECK(e.active_positions.empty());
}

TEST_CASE("identity-like embedding writes the pose into its row") {
  // d_model = 144, unit diagonal, zero bias
  LinearLayer embed(kPoseDim, kPoseDim);
  for (std::size_t i = 0; i < kPoseDim; ++i) embed.weight.at(i, i) = 1.0;
  KeyPose k = make_key(5);
  for (std::size_t j = 0; j < kPoseDim; ++j) k.pose[j] = 0.001 * static_cast<double>(j);
  KeyPoseEmbedding e = embed_key_poses({k}, 30, 10, embed);
  REQUIRE(e.active_positions == std::vector<std::size_t>{15});
  for (std::size_t j = 0; j < kPoseDim; ++j) CHECK(e.rows.at(15, j) == k.pose[j]);
  CHECK(nonzero_rows(e.rows) == 1);
}

TEST_CASE("adjacent keys occupy independent rows") {
  LinearLayer embed = random_embed(8, 2);
  KeyPoseSet keys{make_key(7, 0.3), make_key(8, -0.9)};
  KeyPoseEmbedding e = embed_key_poses(keys, 20, 0, embed);
  CHECK(nonzero_rows(e.rows) == 2);

  // each row depends only on its own pose
  KeyPoseSet keys2{make_key(7, 0.3), make_key(8, 0.42)};
  KeyPoseEmbedding e2 = embed_key_poses(keys2, 20, 0, embed);
  for (std::size_t j = 0; j < 8; ++j) CHECK(e2.rows.at(7, j) == e.rows.at(7, j));
}

TEST_CASE("embedding rejects out-of-range and unsorted keys") {
  LinearLayer embed = random_embed(8, 3);
  CHECK_THROWS_AS(embed_key_poses({make_key(15)}, 20, 8, embed), ValidationError);
  KeyPoseSet unsorted{make_key(9), make_key(4)};
  CHECK_THROWS_AS(embed_key_poses(unsorted, 30, 0, embed), ValidationError);
}

TEST_CASE("tape and eager key-pose embeddings agree") {
  LinearLayer embed = random_embed(12, 4);
  KeyPoseSet keys{make_key(2, -0.4), make_key(9, 1.1)};
  KeyPoseEmbedding eager = embed_key_poses(keys, 24, 6, embed);
  Tape t;
  Tensor taped = t.value(embed_key_poses_tape(t, keys, 24, 6, embed));
  REQUIRE(taped.numel() == eager.rows.numel());
  for (std::size_t i = 0; i < taped.numel(); ++i)
    CHECK(taped.data[i] == Catch::Approx(eager.rows.data[i]).margin(1e-12));
}

TEST_CASE("sparsity: nonzero row count never exceeds the key count") {
  std::mt19937_64 rng(5);
  LinearLayer embed = random_embed(10, 6);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t seq = 30, offset = 6;
    std::size_t m = rng() % 6;
    auto positions = sample_key_positions(seq - offset, 0, m, KeyStrategy::random, rng);
    KeyPoseSet keys;
    for (std::size_t p : positions) keys.push_back(make_key(p, 0.1 + 0.01 * static_cast<double>(p)));
    KeyPoseEmbedding e = embed_key_poses(keys, seq, offset, embed);
    CHECK(nonzero_rows(e.rows) <= m);
    CHECK(e.active_positions.size() == m);
  }
}

TEST_CASE("local PE: no keys means all zeros") {
  PositionalTable half = sinusoidal_pe(64, 8);
  Tensor pe = local_positional_embedding({}, 40, 10, half);
  CHECK(pe.rows() == 40);
  CHECK(pe.cols() == 16);
  for (double v : pe.data) CHECK(v == 0.0);
}

TEST_CASE("local PE at a key frame is table row 0 on both halves") {
  PositionalTable half = sinusoidal_pe(64, 8);
  Tensor pe = local_positional_embedding({12}, 40, 10, half);
  auto row0 = half.row(0);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(pe.at(22, j) == row0[j]);      // left half: [0,1,0,1,...]
    CHECK(pe.at(22, 8 + j) == row0[j]);  // right half
  }
  CHECK(pe.at(22, 1) == 1.0);
  CHECK(pe.at(22, 0) == 0.0);
}

TEST_CASE("local PE distances: keys {10,20}, t=13 gives rows 3 and 7") {
  PositionalTable half = sinusoidal_pe(64, 8);
  Tensor pe = local_positional_embedding({10, 20}, 40, 0, half);
  auto left = half.row(3);
  auto right = half.row(7);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(pe.at(13, j) == left[j]);
    CHECK(pe.at(13, 8 + j) == right[j]);
  }
}

TEST_CASE("local PE boundaries: missing neighbors are zero halves") {
  PositionalTable half = sinusoidal_pe(64, 8);
  Tensor pe = local_positional_embedding({20}, 40, 0, half);
  // before the only key: left half zero, right half set
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(pe.at(5, j) == 0.0);
    CHECK(pe.at(5, 8 + j) == half.row(15)[j]);
  }
  // after it: left half set, right half zero
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(pe.at(33, j) == half.row(13)[j]);
    CHECK(pe.at(33, 8 + j) == 0.0);
  }
}

TEST_CASE("local PE traverses table rows between consecutive keys") {
  PositionalTable half = sinusoidal_pe(64, 8);
  std::size_t a = 6, b = 15;
  Tensor pe = local_positional_embedding({a, b}, 40, 0, half);
  for (std::size_t t = a; t < b; ++t) {
    auto want_left = half.row(t - a);
    auto want_right = half.row(b - t);
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(pe.at(t, j) == want_left[j]);
      CHECK(pe.at(t, 8 + j) == want_right[j]);
    }
  }
}

TEST_CASE("local PE reflection and translation invariance on random layouts") {
  PositionalTable half = sinusoidal_pe(128, 8);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t a = rng() % 30, gap = 2 + rng() % 20;
    std::size_t b = a + gap;
    Tensor pe = local_positional_embedding({a, b}, 80, 0, half);
    // reflection: left half at a+k equals right half at b-k
    for (std::size_t k = 0; k <= gap; ++k)
      for (std::size_t j = 0; j < 8; ++j) CHECK(pe.at(a + k, j) == pe.at(b - k, 8 + j));

    // translation: shifting keys and the query leaves rows unchanged
    std::size_t shift = rng() % 10;
    Tensor moved = local_positional_embedding({a + shift, b + shift}, 80 + shift, 0, half);
    for (std::size_t t = a; t <= b; ++t)
      for (std::size_t j = 0; j < 16; ++j) CHECK(pe.at(t, j) == moved.at(t + shift, j));
  }
}

TEST_CASE("local PE: seed-prefix rows stay zero and distances clamp") {
  PositionalTable half = sinusoidal_pe(16, 4);
  Tensor pe = local_positional_embedding({3}, 60, 10, half);
  for (std::size_t p = 0; p < 10; ++p)
    for (std::size_t j = 0; j < 8; ++j) CHECK(pe.at(p, j) == 0.0);
  // distance 40 clamps to the last table row (15)
  for (std::size_t j = 0; j < 4; ++j) CHECK(pe.at(10 + 43, j) == half.row(15)[j]);

  CHECK_THROWS_AS(local_positional_embedding({9, 2}, 60, 10, half), ValidationError);
}
