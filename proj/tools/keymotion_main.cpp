// Command-line driver: synth / train / generate / eval / gradcheck / curves.
// Exit codes: 0 ok, 2 usage, 3 validation or I/O, 4 numeric failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "keymotion/diagnostics.hpp"
#include "keymotion/keymotion.hpp"

namespace km = keymotion;
namespace fs = std::filesystem;

namespace {

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw km::UsageError("cannot parse number: " + item);
    }
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_double_list(csv)) out.push_back(static_cast<int>(v));
  return out;
}

// Key positions for the omega curve: values in [0,1) are fractions of T,
// values >= 1 are absolute frame indices.
std::vector<std::size_t> parse_key_frames(const std::string& csv, std::size_t frames) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(csv)) {
    if (v < 0.0) throw km::UsageError("key position must be >= 0");
    std::size_t frame = v < 1.0 ? static_cast<std::size_t>(std::llround(v * static_cast<double>(frames)))
                                : static_cast<std::size_t>(std::llround(v));
    out.push_back(std::min(frame, frames - 1));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) throw km::ValidationError("key positions must be strictly increasing");
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw km::IoError("cannot write " + path.string());
  out << text;
}

struct TrainArgs {
  std::string data, out, preset = "tiny", key_strategy = "random", log_file;
  double lambda = 3.0, sigma = 0.1, lr_scale = 1.0;
  std::int64_t steps = 2000;
  std::size_t batch = 4, seed_len = 24, num_keys = 4, probe_keys = 6;
  std::int64_t probe_every = 100;
  std::uint64_t seed = 1;
  bool fixed_keys = false;
};

int cmd_train(const TrainArgs& a) {
  km::LoadedDataset dataset = km::load_dataset(a.data);
  if (dataset.train.empty()) throw km::ValidationError("no training samples in manifest");

  std::size_t music_len = 0;
  for (const auto& s : dataset.train) music_len = std::max(music_len, s.music.frames());
  km::DanceModelConfig cfg =
      km::DanceModelConfig::from_preset(km::preset_from_string(a.preset), a.seed_len, music_len);
  km::DanceModel model(cfg, a.seed);

  km::LossParams loss{a.lambda, a.sigma};
  km::TrainSchedule schedule = km::TrainSchedule::standard(a.steps, a.lr_scale);
  km::TrainOptions opt;
  opt.steps = a.steps;
  opt.batch_size = a.batch;
  opt.seed_len = a.seed_len;
  opt.keys_per_sample = a.num_keys;
  opt.key_strategy = km::key_strategy_from_string(a.key_strategy);
  opt.resample_keys = !a.fixed_keys;
  opt.probe_every = a.probe_every;
  opt.probe_keys = a.probe_keys;
  if (opt.resample_keys == false) {
    std::mt19937_64 rng(a.seed + 99);
    for (auto& s : dataset.train)
      s.fixed_key_positions = km::sample_key_positions(s.motion.frames(), a.seed_len, a.num_keys,
                                                       opt.key_strategy, rng, &s.beat_frames);
  }

  const km::TrainSample* probe = dataset.test.empty() ? nullptr : &dataset.test.front();
  km::TrainResult result = km::train(model, dataset.train, loss, schedule, opt, a.seed, probe);

  km::json manifest;
  manifest["loss_params"] = {{"lambda", loss.lambda}, {"sigma", loss.sigma}};
  km::json stages = km::json::array();
  for (auto& [step, lr] : schedule.stages) stages.push_back({{"step", step}, {"lr", lr}});
  manifest["schedule"] = stages;
  manifest["seed"] = a.seed;
  manifest["step"] = a.steps;
  km::save_checkpoint(a.out, model, manifest);

  std::string log = "step,lr,loss,probe_consistency\n";
  for (const auto& row : result.log) {
    log += std::to_string(row.step) + "," + std::to_string(row.lr) + "," + std::to_string(row.loss) + ",";
    if (row.probe_consistency) log += std::to_string(*row.probe_consistency);
    log += "\n";
  }
  fs::path log_path = a.log_file.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log_file);
  write_text_file(log_path, log);

  std::cout << "trained " << a.steps << " steps; loss " << result.initial_loss << " -> "
            << result.final_loss << "\ncheckpoint: " << a.out << "\nlog: " << log_path.string() << "\n";
  return 0;
}

struct GenerateArgs {
  std::string ckpt, music, seed_motion, keys, gt_motion, out, name = "generated";
  std::size_t seed_frames = 0;
};

int cmd_generate(const GenerateArgs& a) {
  km::Checkpoint ckpt = km::load_checkpoint(a.ckpt);
  km::LoadedMusic music = km::load_music(a.music);
  km::MotionSequence seed_motion = km::load_motion(a.seed_motion);
  if (a.seed_frames > 0) seed_motion = seed_motion.first_frames(a.seed_frames);

  km::KeyPoseSet keys;
  if (!a.keys.empty()) {
    std::optional<km::MotionSequence> gt;
    if (!a.gt_motion.empty()) gt = km::load_motion(a.gt_motion);
    keys = km::load_key_poses(a.keys, gt ? &*gt : nullptr);
  }

  km::MotionSequence generated = ckpt.model.generate(music.features, seed_motion, keys);
  km::save_motion(a.out, generated, a.name);
  std::cout << "generated " << generated.frames() << " frames -> " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string motion, music, keys, gt_motion, out, csv, deltas = "1,2,3,4,5";
  double lambda = std::nan("");
};

int cmd_eval(const EvalArgs& a) {
  km::MotionSequence motion = km::load_motion(a.motion);
  std::vector<std::size_t> music_beats;
  if (!a.music.empty()) music_beats = km::load_music(a.music).beat_frames;

  km::KeyPoseSet keys;
  if (!a.keys.empty()) {
    std::optional<km::MotionSequence> gt;
    if (!a.gt_motion.empty()) gt = km::load_motion(a.gt_motion);
    keys = km::load_key_poses(a.keys, gt ? &*gt : nullptr);
  }

  km::EvalReport report = km::evaluate(motion, keys, music_beats, parse_int_list(a.deltas), motion.fps());
  km::json j = km::report_to_json(report);
  if (!std::isnan(a.lambda)) j["lambda"] = a.lambda;
  if (!a.out.empty()) km::write_json_file(a.out, j);
  if (!a.csv.empty()) write_text_file(a.csv, km::report_to_csv(report));
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SynthArgs {
  std::string out;
  std::size_t clips = 2, frames = 240, period = 30, test_clips = 0;
  double fps = 30.0, amplitude = 0.6;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  km::SynthSpec spec;
  spec.frames = a.frames;
  spec.period = a.period;
  spec.clips = a.clips;
  spec.test_clips = a.test_clips;
  spec.fps = a.fps;
  spec.amplitude = a.amplitude;
  spec.seed = a.seed;
  km::DatasetManifest manifest = km::synth_dataset(spec, a.out);
  std::cout << "wrote " << manifest.samples.size() << " clips to " << a.out << "\n";
  return 0;
}

struct GradcheckArgs {
  std::string preset = "tiny";
  std::uint64_t seed = 7;
  std::size_t coords = 200;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  bool ok = true;
  std::cout << "per-op gradient checks (tolerance 1e-6):\n";
  for (const auto& check : km::op_gradcheck_suite(a.seed)) {
    bool pass = check.max_rel_err < 1e-6;
    ok = ok && pass;
    std::printf("  %-22s max rel err %.3e  %s\n", check.name.c_str(), check.max_rel_err,
                pass ? "ok" : "FAIL");
  }

  km::DanceModelConfig probe_cfg =
      km::DanceModelConfig::from_preset(km::preset_from_string(a.preset), 4, 16);
  km::DanceModel probe_model(probe_cfg, a.seed);
  std::size_t n_params = probe_model.parameters().size();
  std::size_t per_param = std::max<std::size_t>(1, (a.coords + n_params - 1) / n_params);
  km::GradCheckReport full =
      km::full_model_gradcheck(a.seed, per_param, km::preset_from_string(a.preset));
  bool full_pass = full.max_rel_err < 1e-3;
  std::printf("full model (%s): max rel err %.3e over %zu coords (worst %s)  %s\n", a.preset.c_str(),
              full.max_rel_err, full.coords_checked, full.worst_coord.c_str(), full_pass ? "ok" : "FAIL");
  if (!ok || !full_pass) throw km::NumericError("gradient check failed");
  return 0;
}

struct CurvesArgs {
  bool omega = false, velocity = false;
  std::string keys, motion, music, sweep, out;
  double lambda = 3.0, sigma = 0.1;
  std::size_t frames = 240;
};

int cmd_curves(const CurvesArgs& a) {
  int modes = int(a.omega) + int(a.velocity) + int(!a.sweep.empty());
  if (modes != 1) throw km::UsageError("curves: pick exactly one of --omega, --velocity, --sweep");
  if (a.out.empty()) throw km::UsageError("curves: --out is required");

  if (a.omega) {
    std::vector<std::size_t> key_frames = parse_key_frames(a.keys, a.frames);
    std::string csv = "t,omega\n";
    for (std::size_t t = 0; t < a.frames; ++t) {
      std::ostringstream row;
      row.precision(17);
      row << t << ',' << km::weight_curve(t, key_frames, a.frames, a.lambda, a.sigma) << '\n';
      csv += row.str();
    }
    write_text_file(a.out, csv);
    std::cout << "wrote omega curve (" << a.frames << " samples) to " << a.out << "\n";
    return 0;
  }

  if (a.velocity) {
    if (a.motion.empty()) throw km::UsageError("curves --velocity needs --motion");
    km::MotionSequence motion = km::load_motion(a.motion);
    std::vector<double> velocity = km::kinetic_velocity(motion);
    std::vector<std::size_t> motion_beats = km::detect_motion_beats(motion);
    std::vector<std::size_t> music_beats;
    if (!a.music.empty()) music_beats = km::load_music(a.music).beat_frames;
    auto contains = [](const std::vector<std::size_t>& v, std::size_t x) {
      return std::find(v.begin(), v.end(), x) != v.end();
    };
    std::string csv = "t,velocity,motion_beat,music_beat\n";
    for (std::size_t t = 0; t < velocity.size(); ++t) {
      std::ostringstream row;
      row.precision(17);
      row << t << ',' << velocity[t] << ',' << int(contains(motion_beats, t)) << ','
          << int(contains(music_beats, t)) << '\n';
      csv += row.str();
    }
    write_text_file(a.out, csv);
    std::cout << "wrote velocity curve (" << velocity.size() << " samples, " << motion_beats.size()
              << " motion beats) to " << a.out << "\n";
    return 0;
  }

  // sweep: aggregate eval reports (each carrying a lambda) into one CSV
  std::vector<std::string> files;
  std::stringstream ss(a.sweep);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) files.push_back(item);
  if (files.empty()) throw km::UsageError("curves --sweep needs report files");
  std::vector<std::tuple<double, double, double>> rows;
  for (const auto& f : files) {
    km::json j = km::read_json_file(f);
    if (!j.contains("lambda")) throw km::ValidationError("sweep report missing lambda: " + f);
    double ec = j["consistency_error"].is_null() ? std::nan("") : j["consistency_error"].get<double>();
    double scv = j["smoothness_cv"].is_null() ? std::nan("") : j["smoothness_cv"].get<double>();
    rows.emplace_back(j["lambda"].get<double>(), ec, scv);
  }
  std::sort(rows.begin(), rows.end());
  std::string csv = "lambda,consistency_error,smoothness_cv\n";
  for (auto& [lam, ec, scv] : rows) {
    std::ostringstream row;
    row.precision(17);
    row << lam << ',' << ec << ',' << scv << '\n';
    csv += row.str();
  }
  write_text_file(a.out, csv);
  std::cout << "wrote sweep of " << rows.size() << " reports to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"key-pose-constrained music-driven dance motion generation"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model on a dataset manifest");
  train->add_option("--data", train_args.data, "dataset manifest.json")->required();
  train->add_option("--out", train_args.out, "output checkpoint path")->required();
  train->add_option("--preset", train_args.preset, "large|light|tiny");
  train->add_option("--lambda", train_args.lambda, "key-frame loss weight");
  train->add_option("--sigma", train_args.sigma, "gaussian width in normalized time");
  train->add_option("--steps", train_args.steps, "training steps");
  train->add_option("--batch", train_args.batch, "batch size");
  train->add_option("--seed-len", train_args.seed_len, "seed motion length T'");
  train->add_option("--num-keys", train_args.num_keys, "key poses per sample");
  train->add_option("--key-strategy", train_args.key_strategy, "uniform|random|beat");
  train->add_flag("--fixed-keys", train_args.fixed_keys, "sample key positions once per clip, not per step");
  train->add_option("--lr-scale", train_args.lr_scale, "desk factor on the 1e-4 schedule");
  train->add_option("--probe-every", train_args.probe_every, "steps between held-out probes");
  train->add_option("--probe-keys", train_args.probe_keys, "keys for the probe metric");
  train->add_option("--seed", train_args.seed, "rng seed");
  train->add_option("--log", train_args.log_file, "loss log csv (default <out>.log.csv)");

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "generate motion from music, seed motion and key poses");
  gen->add_option("--ckpt", gen_args.ckpt, "checkpoint file")->required();
  gen->add_option("--music", gen_args.music, "music feature tensor file")->required();
  gen->add_option("--seed-motion", gen_args.seed_motion, "seed motion tensor file")->required();
  gen->add_option("--seed-frames", gen_args.seed_frames, "use only the first N seed frames");
  gen->add_option("--keys", gen_args.keys, "key poses json");
  gen->add_option("--gt-motion", gen_args.gt_motion, "ground-truth motion for from_gt keys");
  gen->add_option("--out", gen_args.out, "output motion tensor file")->required();
  gen->add_option("--name", gen_args.name, "clip name for the sidecar");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "compute consistency / smoothness / beat metrics");
  eval->add_option("--motion", eval_args.motion, "motion tensor file to evaluate")->required();
  eval->add_option("--music", eval_args.music, "music file providing beats");
  eval->add_option("--keys", eval_args.keys, "key poses json");
  eval->add_option("--gt-motion", eval_args.gt_motion, "ground-truth motion for from_gt keys");
  eval->add_option("--deltas", eval_args.deltas, "comma list of beat windows");
  eval->add_option("--lambda", eval_args.lambda, "lambda metadata echoed into the report");
  eval->add_option("--out", eval_args.out, "report json path");
  eval->add_option("--csv", eval_args.csv, "per-delta csv path");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "write a synthetic music/motion dataset");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--clips", synth_args.clips, "number of clips");
  synth->add_option("--frames", synth_args.frames, "frames per clip");
  synth->add_option("--period", synth_args.period, "beat period in frames");
  synth->add_option("--test-clips", synth_args.test_clips, "trailing clips marked split=test");
  synth->add_option("--fps", synth_args.fps, "frames per second");
  synth->add_option("--amplitude", synth_args.amplitude, "joint swing amplitude (radians)");
  synth->add_option("--seed", synth_args.seed, "rng seed");

  GradcheckArgs grad_args;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  grad->add_option("--preset", grad_args.preset, "model preset for the end-to-end check");
  grad->add_option("--seed", grad_args.seed, "rng seed");
  grad->add_option("--coords", grad_args.coords, "minimum sampled coordinates for the full model");

  CurvesArgs curves_args;
  auto* curves = app.add_subcommand("curves", "csv curves: loss weights, kinetic velocity, sweeps");
  curves->add_flag("--omega", curves_args.omega, "emit the loss weight curve");
  curves->add_flag("--velocity", curves_args.velocity, "emit kinetic velocity with beat markers");
  curves->add_option("--sweep", curves_args.sweep, "comma list of eval reports to aggregate");
  curves->add_option("--lambda", curves_args.lambda, "omega: lambda");
  curves->add_option("--sigma", curves_args.sigma, "omega: sigma");
  curves->add_option("--keys", curves_args.keys, "omega: key positions (fractions of T or frames)");
  curves->add_option("--frames", curves_args.frames, "omega: number of frames T");
  curves->add_option("--motion", curves_args.motion, "velocity: motion file");
  curves->add_option("--music", curves_args.music, "velocity: music file for beat markers");
  curves->add_option("--out", curves_args.out, "output csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (gen->parsed()) return cmd_generate(gen_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (synth->parsed()) return cmd_synth(synth_args);
    if (grad->parsed()) return cmd_gradcheck(grad_args);
    if (curves->parsed()) return cmd_curves(curves_args);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const km::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const km::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const km::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
