// fdtrack: offline training, tracking, evaluation and verification commands.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration
// error, 3 missing input file, 4 malformed input data.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fdt/bench.hpp"
#include "fdt/checkpoint.hpp"
#include "fdt/eval.hpp"
#include "fdt/gradcheck.hpp"
#include "fdt/io.hpp"
#include "fdt/run_config.hpp"
#include "fdt/synthetic.hpp"
#include "fdt/tracking.hpp"
#include "fdt/training.hpp"

namespace fs = std::filesystem;
using namespace fdt;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kMissing = 3, kMalformed = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw MissingFileError(std::string(what) + " not found: " + p.string());
}

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string roi;
  std::string policy;
};

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    require_file(o.config, "config file");
    cfg = load_run_config(o.config, cfg);
  }
  if (o.seed) cfg.track.seed = cfg.train.seed = *o.seed;
  if (!o.variant.empty()) {
    if (o.variant == "notrain") {
      cfg.variant = Variant::Default;
      cfg.notrain = true;
    } else {
      try {
        cfg.variant = parse_variant(o.variant);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (!o.roi.empty()) cfg.roi = parse_roi_method(o.roi);
  if (!o.policy.empty()) {
    try {
      cfg.track.policy = parse_policy(o.policy);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return cfg;
}

Network<float> load_or_init(const std::string& ckpt, const RunConfig& cfg) {
  NetworkSpec spec = cfg.network_spec(1);
  spec.seed = cfg.track.seed + 1;
  if (ckpt.empty()) return Network<float>(spec);
  require_file(ckpt, "checkpoint");
  return load_checkpoint<float>(ckpt, spec);
}

// ---------------------------------------------------------------------------

int cmd_train(const std::vector<std::string>& data, const std::string& out, const CommonOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  VideoDataset dataset;
  for (std::size_t d = 0; d < data.size(); ++d) {
    const SequenceDir seq = open_sequence(data[d], true);
    Video v;
    v.name = seq.dir.filename().string();
    v.domain = static_cast<int>(d);
    for (int i = 0; i < seq.frame_count(); ++i) v.frames.push_back(seq.load_frame(i));
    v.ground_truth = seq.ground_truth;
    dataset.videos.push_back(std::move(v));
  }
  NetworkSpec spec = cfg.network_spec(static_cast<int>(data.size()));
  spec.seed = cfg.train.seed + 1;
  Network<float> net(spec);
  const TrainReport report = train_offline(dataset, net, cfg.train);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  save_checkpoint(net, out);

  std::ofstream trace(out + ".loss.txt");
  trace << "# iteration domain frame loss\n";
  char line[96];
  for (std::size_t i = 0; i < report.loss.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu %d %d %.6f\n", i, report.domain[i], report.frame[i] + 1, report.loss[i]);
    trace << line;
  }
  std::printf("trained %zu iterations on %zu domains, final loss %.4f -> %s\n", report.loss.size(), data.size(),
              report.loss.empty() ? 0.0 : report.loss.back(), out.c_str());
  return kOk;
}

int cmd_track(const std::string& ckpt, const std::string& seq_dir, const std::string& out, std::string log,
              const CommonOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const SequenceDir seq = open_sequence(seq_dir);
  Network<float> net = load_or_init(ckpt, cfg);
  if (cfg.notrain) net.reinit_fc_trunk(cfg.track.seed + 2);

  const SequenceResult res = run_sequence(
      std::move(net), seq.frame_count(), [&](int i) { return seq.load_frame(i); }, seq.ground_truth.front(),
      cfg.track);
  write_results(out, res.frames);
  if (log.empty()) log = out + ".log.jsonl";
  std::ofstream log_out(log);
  if (!log_out) throw MissingFileError("cannot write log " + log);
  write_frame_log(log_out, res.frames);

  std::printf("frames %zu  updates %d  update iterations %d  conv passes %llu\n", res.frames.size(), res.update_events,
              res.total_update_iterations, static_cast<unsigned long long>(res.conv_passes));
  return kOk;
}

int cmd_eval(const std::string& pred, const std::string& seq_dir, const std::string& out) {
  require_file(pred, "prediction file");
  const auto boxes = read_result_boxes(pred);
  const auto gt = read_ground_truth(fs::path(seq_dir) / kGroundTruthFile);
  EvalResult r;
  try {
    r = evaluate_ope(boxes, gt);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::ofstream os(out);
  if (!os) throw MissingFileError("cannot write " + out);
  write_curves(os, r);
  std::printf("frames %d  precision@20 %.4f  AUC %.4f\n", r.frames(), r.precision_at_20, r.auc);
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, int instances) {
  GradCheckConfig cfg;
  cfg.seed = seed;
  cfg.instances = instances;
  const GradCheckReport report = run_gradcheck(cfg);
  for (const auto& c : report.components)
    std::printf("%-12s %s  instances %d  redrawn %d  probes %lld  worst rel error %.3e\n", c.name.c_str(),
                c.passed ? "PASS" : "FAIL", c.instances, c.redrawn, c.probes, c.worst_error);
  std::printf("gradcheck %s in %.2f s\n", report.passed() ? "passed" : "FAILED", report.seconds);
  return report.passed() ? kOk : kVerifyFailed;
}

int cmd_bench(const std::string& ckpt, const std::string& seq_dir, int candidates, int frames,
              const CommonOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const SequenceDir seq = open_sequence(seq_dir);
  Network<float> net = load_or_init(ckpt, cfg);
  BenchConfig bc;
  bc.candidates = candidates;
  bc.frames = frames;
  bc.preprocess = cfg.track.preprocess;
  bc.roi_offset = cfg.track.roi_offset;
  bc.seed = cfg.track.seed;
  const BenchResult r = run_bench(
      net, seq.frame_count(), [&](int i) { return seq.load_frame(i); }, seq.ground_truth, bc);
  std::printf("frames %d  candidates %d\n", r.frames, r.candidates);
  std::printf("shared  conv passes %llu  (%.3f per frame)  time %.3f s\n",
              static_cast<unsigned long long>(r.shared.conv_passes), double(r.shared.conv_passes) / r.frames,
              r.shared.seconds);
  std::printf("crop    conv passes %llu  (%.3f per frame)  time %.3f s\n",
              static_cast<unsigned long long>(r.crop.conv_passes), double(r.crop.conv_passes) / r.frames,
              r.crop.seconds);
  std::printf("speedup %.2fx\n", r.speedup());
  return kOk;
}

int cmd_synth(const std::string& out, SyntheticConfig sc) {
  const VideoDataset ds = make_synthetic_dataset(sc);
  for (std::size_t i = 0; i < ds.videos.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "seq%02zu", i);
    write_sequence(ds.videos[i], fs::path(out) / name);
  }
  std::printf("wrote %zu sequences of %d frames to %s\n", ds.videos.size(), sc.frames, out.c_str());
  return kOk;
}

void add_common(CLI::App* sub, CommonOptions& o, bool network_flags, bool policy) {
  sub->add_option("--config", o.config, "Key = value configuration file");
  sub->add_option("--seed", o.seed, "Random seed (overrides the config)");
  if (network_flags) {
    sub->add_option("--variant", o.variant, "default|conv5|fc2|notrain");
    sub->add_option("--roi", o.roi, "align|pool");
  }
  if (policy) sub->add_option("--policy", o.policy, "dynamic|fixed10");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic fine-tuning CNN tracker"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::vector<std::string> data;
  std::string out, ckpt, seq, pred, log;
  std::uint64_t seed = 1;
  int instances = 20, candidates = 256, frames = 0;
  SyntheticConfig synth;

  auto* train = app.add_subcommand("train", "Multi-domain offline training");
  train->add_option("--data", data, "Sequence directories, one domain each")->required();
  train->add_option("--out", out, "Checkpoint to write")->required();
  add_common(train, opts, true, false);

  auto* track = app.add_subcommand("track", "Track one sequence");
  track->add_option("--ckpt", ckpt, "Trained checkpoint (random weights when omitted)");
  track->add_option("--seq", seq, "Sequence directory")->required();
  track->add_option("--out", out, "Result file")->required();
  track->add_option("--log", log, "Per-frame JSON-lines log (default: <out>.log.jsonl)");
  add_common(track, opts, true, true);

  auto* eval = app.add_subcommand("eval", "One-pass evaluation of a result file");
  eval->add_option("--pred", pred, "Result file")->required();
  eval->add_option("--seq", seq, "Sequence directory with ground truth")->required();
  eval->add_option("--out", out, "Curve output file")->required();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad->add_option("--seed", seed, "Random seed");
  grad->add_option("--instances", instances, "Instances per component")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Shared-map vs per-crop scoring");
  bench->add_option("--ckpt", ckpt, "Trained checkpoint (random weights when omitted)");
  bench->add_option("--seq", seq, "Sequence directory")->required();
  bench->add_option("--candidates", candidates, "Candidates per frame")->check(CLI::PositiveNumber);
  bench->add_option("--frames", frames, "Frames to measure (0 = all)")->check(CLI::NonNegativeNumber);
  add_common(bench, opts, true, false);

  auto* syn = app.add_subcommand("synth", "Write synthetic sequences");
  syn->add_option("--out", out, "Output directory")->required();
  syn->add_option("--videos", synth.videos, "Number of sequences")->check(CLI::PositiveNumber);
  syn->add_option("--frames", synth.frames, "Frames per sequence")->check(CLI::PositiveNumber);
  syn->add_option("--size", synth.width, "Frame side in pixels");
  syn->add_option("--target", synth.target_w, "Target side in pixels");
  syn->add_option("--texture", synth.texture_base, "Texture id of the first sequence");
  syn->add_option("--seed", synth.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(data, out, opts);
    if (*track) return cmd_track(ckpt, seq, out, log, opts);
    if (*eval) return cmd_eval(pred, seq, out);
    if (*grad) return cmd_gradcheck(seed, instances);
    if (*bench) return cmd_bench(ckpt, seq, candidates, frames, opts);
    if (*syn) {
      synth.height = synth.width;
      synth.target_h = synth.target_w;
      return cmd_synth(out, synth);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const MissingFileError& e) {
    std::cerr << "missing file: " << e.what() << '\n';
    return kMissing;
  } catch (const GroundTruthError& e) {
    std::cerr << "malformed ground truth: " << e.what() << '\n';
    return kMalformed;
  } catch (const CheckpointError& e) {
    std::cerr << "bad checkpoint: " << e.what() << '\n';
    return e.kind() == CheckpointError::Kind::Io ? kMissing : kMalformed;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kMalformed;
  } catch (const ImageError& e) {
    std::cerr << "image error: " << e.what() << '\n';
    return kMalformed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMalformed;
  }
  return kUsage;
}
