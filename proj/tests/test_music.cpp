#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "keymotion/music.hpp"

using namespace keymotion;

TEST_CASE("assemble_features fixes the column order") {
  Tensor chroma({1, 12});
  chroma.at(0, 0) = 1.0;  // e1
  Tensor downbeat({1, 2});
  downbeat.at(0, 0) = 1.0;
  Tensor onset({1, 1});
  onset.at(0, 0) = 0.5;
  MusicFeatureSequence seq = assemble_features(chroma, downbeat, onset, 30.0);
  REQUIRE(seq.frames() == 1);
  auto f = seq.frame(0);
  CHECK(f[0] == 1.0);
  for (std::size_t c = 1; c < 12; ++c) CHECK(f[c] == 0.0);
  CHECK(f[12] == 1.0);
  CHECK(f[13] == 0.0);
  CHECK(f[14] == 0.5);
}

TEST_CASE("assemble of zeros and length mismatch") {
  Tensor chroma({4, 12}), downbeat({4, 2}), onset({4, 1});
  MusicFeatureSequence seq = assemble_features(chroma, downbeat, onset, 30.0);
  for (std::size_t t = 0; t < 4; ++t)
    for (double v : seq.frame(t)) CHECK(v == 0.0);

  Tensor short_onset({3, 1});
  CHECK_THROWS_AS(assemble_features(chroma, downbeat, short_onset, 30.0), ValidationError);
}

TEST_CASE("assemble then slice is lossless") {
  std::mt19937_64 rng(8);
  Tensor chroma({6, 12}), downbeat({6, 2}), onset({6, 1});
  fill_uniform(chroma, 0.0, 1.0, rng);
  fill_uniform(downbeat, 0.0, 1.0, rng);
  fill_uniform(onset, 0.0, 3.0, rng);
  MusicFeatureSequence seq = assemble_features(chroma, downbeat, onset, 30.0);
  for (std::size_t t = 0; t < 6; ++t) {
    auto f = seq.frame(t);
    for (std::size_t c = 0; c < 12; ++c) CHECK(f[c] == chroma.at(t, c));
    CHECK(f[12] == downbeat.at(t, 0));
    CHECK(f[13] == downbeat.at(t, 1));
    CHECK(f[14] == onset.at(t, 0));
  }
}

TEST_CASE("ingestion rejects non-15 width and clamps chroma") {
  Tensor wrong({5, 14});
  CHECK_THROWS_AS(MusicFeatureSequence::from_matrix(wrong, 30.0), ValidationError);

  Tensor m({1, 15});
  m.at(0, 0) = -0.5;
  m.at(0, 11) = 1.5;
  m.at(0, 14) = 2.0;  // onset is not clamped
  MusicFeatureSequence seq = MusicFeatureSequence::from_matrix(m, 30.0);
  CHECK(seq.at(0, 0) == 0.0);
  CHECK(seq.at(0, 11) == 1.0);
  CHECK(seq.at(0, 14) == 2.0);
}

TEST_CASE("musical_beats reads the beat-flag channel") {
  MusicFeatureSequence seq(60, 30.0);
  CHECK(musical_beats(seq).frames.empty());

  seq.at(10, kBeatFlagColumn) = 1.0;
  seq.at(40, kBeatFlagColumn) = 1.0;
  BeatAnnotation beats = musical_beats(seq);
  CHECK(beats.frames == std::vector<std::size_t>{10, 40});

  MusicFeatureSequence soft(20, 30.0);
  soft.at(5, kBeatFlagColumn) = 0.6;
  soft.at(9, kBeatFlagColumn) = 0.4;
  CHECK(musical_beats(soft, 0.5).frames == std::vector<std::size_t>{5});

  CHECK_THROWS_AS(musical_beats(seq, -1.0), ValidationError);
}

TEST_CASE("beats output is strictly increasing and in range") {
  std::mt19937_64 rng(3);
  MusicFeatureSequence seq(100, 30.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < 100; ++t) seq.at(t, kBeatFlagColumn) = unit(rng);
  BeatAnnotation beats = musical_beats(seq, 0.8);
  for (std::size_t i = 0; i < beats.frames.size(); ++i) {
    CHECK(beats.frames[i] < 100);
    if (i) CHECK(beats.frames[i] > beats.frames[i - 1]);
  }
}
