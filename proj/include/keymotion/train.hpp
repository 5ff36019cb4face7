#pragma once

// Adam training of the dance model under the weighted reconstruction loss,
// with the three-stage learning-rate schedule rescaled to desk-size runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "keymotion/errors.hpp"
#include "keymotion/evaluation.hpp"
#include "keymotion/model.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/music.hpp"
#include "keymotion/nn.hpp"

namespace keymotion {

struct TrainSample {
  MusicFeatureSequence music;
  MotionSequence motion;  // ground truth, full length T
  std::vector<std::size_t> beat_frames;
  std::vector<std::size_t> fixed_key_positions;  // used when key resampling is off
};

// Stage thresholds follow the 100k/250k-of-300k proportions of the reference
// schedule: drops to lr/10 and lr/100 at 40% and 80% of the run.
struct TrainSchedule {
  std::vector<std::pair<std::int64_t, double>> stages;  // (first step, lr)

  static TrainSchedule standard(std::int64_t total_steps, double lr_scale = 1.0) {
    double base = 1e-4 * lr_scale;
    std::int64_t first = std::max<std::int64_t>(1, static_cast<std::int64_t>(0.4 * static_cast<double>(total_steps)));
    std::int64_t second = std::max(first + 1, static_cast<std::int64_t>(0.8 * static_cast<double>(total_steps)));
    TrainSchedule s;
    s.stages = {{0, base}, {first, base * 0.1}, {second, base * 0.01}};
    return s;
  }

  double lr_at(std::int64_t step) const {
    if (stages.empty()) throw ValidationError("schedule: no stages");
    double lr = stages.front().second;
    for (const auto& [first, value] : stages) {
      if (step >= first) lr = value;
    }
    return lr;
  }

  void validate() const {
    if (stages.empty()) throw ValidationError("schedule: no stages");
    for (std::size_t i = 1; i < stages.size(); ++i)
      if (stages[i].first <= stages[i - 1].first)
        throw ValidationError("schedule: stage thresholds must increase");
  }
};

struct TrainOptions {
  std::int64_t steps = 2000;
  std::size_t batch_size = 4;
  std::size_t seed_len = 24;
  std::size_t keys_per_sample = 4;
  KeyStrategy key_strategy = KeyStrategy::random;
  bool resample_keys = true;  // fresh positions every step vs fixed per sample
  std::int64_t probe_every = 100;
  std::size_t probe_keys = 6;
};

struct TrainLogRow {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> probe_consistency;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

namespace detail {

inline std::vector<std::size_t> keys_for_sample(const TrainSample& sample, const TrainOptions& opt,
                                                std::mt19937_64& rng) {
  if (!opt.resample_keys && !sample.fixed_key_positions.empty()) return sample.fixed_key_positions;
  return sample_key_positions(sample.motion.frames(), opt.seed_len, opt.keys_per_sample, opt.key_strategy,
                              rng, &sample.beat_frames);
}

}  // namespace detail

// Probe metric: generate on the probe clip with deterministic uniform keys
// and report the consistency error.
inline std::optional<double> probe_consistency(DanceModel& model, const TrainSample& probe,
                                               std::size_t seed_len, std::size_t n_keys) {
  std::mt19937_64 rng(0);  // uniform strategy draws nothing
  auto positions = sample_key_positions(probe.motion.frames(), seed_len, n_keys, KeyStrategy::uniform, rng);
  KeyPoseSet keys = extract_key_poses(probe.motion, positions);
  MotionSequence seed = probe.motion.first_frames(seed_len);
  MotionSequence generated = model.generate(probe.music, seed, keys);
  return consistency_error(generated, keys);
}

inline TrainResult train(DanceModel& model, const std::vector<TrainSample>& dataset,
                         const LossParams& loss_params, const TrainSchedule& schedule,
                         const TrainOptions& opt, std::uint64_t seed,
                         const TrainSample* probe = nullptr) {
  if (dataset.empty()) throw ValidationError("train: dataset is empty");
  loss_params.validate();
  schedule.validate();
  for (const auto& s : dataset) {
    if (s.music.frames() != s.motion.frames())
      throw ValidationError("train: music/motion length mismatch in a sample");
    if (opt.seed_len >= s.motion.frames()) throw ValidationError("train: seed_len not smaller than clip");
  }

  std::mt19937_64 rng(seed);
  auto params = model.parameters();
  Adam adam;
  TrainResult result;

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // forces a shuffle on first use

  for (std::int64_t step = 0; step < opt.steps; ++step) {
    double lr = schedule.lr_at(step);
    adam.config().lr = lr;

    zero_grads(params);
    Tape tape;
    std::vector<Tape::Var> losses;
    std::size_t batch = std::min<std::size_t>(opt.batch_size, dataset.size());
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::uniform_int_distribution<std::size_t> pick(0, i - 1);
          std::swap(order[i - 1], order[pick(rng)]);
        }
        cursor = 0;
      }
      const TrainSample& sample = dataset[order[cursor++]];
      std::vector<std::size_t> positions = detail::keys_for_sample(sample, opt, rng);
      KeyPoseSet keys = extract_key_poses(sample.motion, positions);
      MotionSequence seed_motion = sample.motion.first_frames(opt.seed_len);
      Tape::Var pred = model.forward_tape(tape, sample.music, seed_motion, keys);
      losses.push_back(weighted_reconstruction_loss(tape, pred, sample.motion.to_matrix(), positions, loss_params));
    }
    Tape::Var total = losses[0];
    for (std::size_t i = 1; i < losses.size(); ++i) total = tape.add(total, losses[i]);
    if (losses.size() > 1) total = tape.scale(total, 1.0 / static_cast<double>(losses.size()));

    double loss_value = tape.value(total).data[0];
    if (!std::isfinite(loss_value))
      throw NumericError("train: loss diverged at step " + std::to_string(step));
    if (step == 0) result.initial_loss = loss_value;
    result.final_loss = loss_value;

    tape.backward(total);
    adam.step(params);

    TrainLogRow row;
    row.step = step;
    row.lr = lr;
    row.loss = loss_value;
    bool last = step + 1 == opt.steps;
    if (probe && opt.probe_every > 0 && (step % opt.probe_every == 0 || last))
      row.probe_consistency = probe_consistency(model, *probe, opt.seed_len, opt.probe_keys);
    result.log.push_back(row);
  }
  return result;
}

}  // namespace keymotion
