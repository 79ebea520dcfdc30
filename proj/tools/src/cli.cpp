#include "sats_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "sats/checkpoint.hpp"
#include "sats/error.hpp"
#include "sats/experiment.hpp"
#include "sats/image_io.hpp"
#include "sats/metrics.hpp"
#include "sats_cli/benchmark_io.hpp"
#include "sats_cli/config.hpp"

namespace fs = std::filesystem;

namespace sats::cli {
namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<double> tau1, tau2, alpha, gamma;

  std::string data;
  std::string stage;
  std::string detector;
  std::string unk_dir;
  bool dump_masks = false;
  std::string checkpoint;
  std::string val;
  std::vector<double> tau1_values;
  std::string pipeline = "baseline";
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) cfg.stage.iterations = *o.iterations;
  if (o.tau1) cfg.stage.pseudo.tau1 = *o.tau1;
  if (o.tau2) cfg.stage.pseudo.tau2 = *o.tau2;
  if (o.alpha) cfg.stage.ema_alpha = *o.alpha;
  if (o.gamma) cfg.stage.virtual_unknown.gamma = *o.gamma;
  cfg.bench.seed = cfg.seed;
  cfg.stage.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing required ") + what);
  if (!fs::exists(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + path.string());
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string log_csv_header() { return "iteration,loss_source,loss_target,q_mean,unknown_fraction,wall_ms\n"; }

std::string log_csv_row(const TrainLogRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.iteration, r.loss_source, r.loss_target,
                r.q_mean, r.unknown_fraction, r.wall_ms);
  return buf;
}

int gen_data(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const Benchmark bench = generate_benchmark(cfg.bench);
  write_atomically(o.out, [&](const fs::path& dir) {
    save_benchmark(bench, dir);
    write_text(dir / "config.txt", to_text(cfg));
  });
  const auto freqs = class_pixel_frequencies(bench.source);
  out << "source " << bench.source.size() << ", target_train " << bench.target_train.size() << ", target_val "
      << bench.target_val.size() << " images -> " << o.out << "\n";
  out << "source class pixels:";
  for (std::size_t c = 0; c < freqs.size(); ++c) out << " " << c << "=" << freqs[c];
  out << "\nhead classes:";
  for (int c : bench.source.class_space.head_classes) out << " " << c;
  out << "\n";
  return kExitOk;
}

int train(const Options& o, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = resolve(o);
  require_path(o.data, "benchmark directory (--data)");
  std::optional<NetworkParams> detector;
  if (o.stage == "stage2") {
    if (o.detector.empty() && o.unk_dir.empty()) {
      throw ValidationError("train stage2 needs a detector checkpoint (--detector) or detected unknowns (--unk-dir)");
    }
    if (!o.detector.empty()) require_path(o.detector, "detector checkpoint");
    if (!o.unk_dir.empty()) require_path(o.unk_dir, "detected-unknown directory");
    if (cfg.stage.stage2_from_detector && o.detector.empty()) {
      throw ValidationError("stage2_from_detector requires --detector");
    }
  }
  const Benchmark bench = load_benchmark(o.data);

  std::ostringstream log;
  log << log_csv_header();
  TrainHooks hooks;
  const int every = std::max(1, cfg.stage.iterations / 20);
  TrainLogRecord last;
  hooks.on_log = [&](const TrainLogRecord& r) {
    log << log_csv_row(r);
    last = r;
    if (r.iteration % every == 0 || r.iteration + 1 == cfg.stage.iterations) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "[%s] iter %d/%d  L_S %.4f  L_T %.4f  q %.3f\n", o.stage.c_str(),
                    r.iteration + 1, cfg.stage.iterations, r.loss_source, r.loss_target, r.q_mean);
      err << buf << std::flush;
    }
  };

  write_atomically(o.out, [&](const fs::path& dir) {
    if (o.dump_masks) fs::create_directories(dir / "masks");
    int prev_iteration = -1, slot = 0;
    hooks.on_mixup_mask = [&](const MixupMaskEvent& e) {
      if (!o.dump_masks) return;
      slot = e.iteration == prev_iteration ? slot + 1 : 0;
      prev_iteration = e.iteration;
      char stem[96];
      std::snprintf(stem, sizeof stem, "it%05d_s%d_t%04zu_%s", e.iteration, slot, e.target_index,
                    e.hard_unknown_phase ? "b" : "a");
      write_mask_png(e.detector_mask, dir / "masks" / (std::string(stem) + "_detector.png"));
      write_mask_png(e.used_mask, dir / "masks" / (std::string(stem) + "_used.png"));
    };

    NetworkParams model;
    if (o.stage == "stage1") {
      model = run_stage1(cfg.stage, bench.source, bench.target_train, hooks);
    } else if (o.stage == "baseline") {
      model = run_one_stage_baseline(cfg.stage, bench.source, bench.target_train, hooks);
    } else {
      if (!o.detector.empty()) detector = load_checkpoint(o.detector);
      const Dataset detected = o.unk_dir.empty() ? infer_unknowns(*detector, bench.target_train)
                                                 : load_label_maps(bench.target_train, o.unk_dir);
      model = run_stage2(cfg.stage, bench.source, bench.target_train, detected, hooks,
                         detector ? &*detector : nullptr);
    }
    save_checkpoint(model, dir / "model.ckpt");
    write_text(dir / "train_log.csv", log.str());
    write_text(dir / "config.txt", to_text(cfg));
  });

  char buf[160];
  if (cfg.stage.iterations > 0) {
    std::snprintf(buf, sizeof buf, "final L_S %.4f  L_T %.4f  q %.3f\n", last.loss_source, last.loss_target,
                  last.q_mean);
  } else {
    std::snprintf(buf, sizeof buf, "no iterations run; wrote initial parameters\n");
  }
  out << o.out << "/model.ckpt written; " << buf;
  return kExitOk;
}

NetworkParams load_expanded(const std::string& path, const ClassSpace& cs, const char* what) {
  require_path(path, what);
  NetworkParams p = load_checkpoint(path);
  if (!p.expanded() || p.num_known() != cs.num_known) {
    throw ValidationError(std::string(what) + " has " + std::to_string(p.num_classes()) + " outputs; expected " +
                          std::to_string(cs.num_outputs()));
  }
  return p;
}

int infer_unk(const Options& o, std::ostream& out) {
  resolve(o);
  require_path(o.data, "benchmark directory (--data)");
  const Benchmark bench = load_benchmark(o.data);
  const NetworkParams det = load_expanded(o.detector, bench.target_train.class_space, "detector checkpoint");
  const Dataset maps = infer_unknowns(det, bench.target_train);
  write_atomically(o.out, [&](const fs::path& dir) { save_label_maps(maps, dir); });
  const DetectorStats stats = detector_stats(det, maps, bench.target_val.empty() ? maps : bench.target_val);
  out << maps.size() << " label maps -> " << o.out << "; images with unknowns " << pct(stats.images_with_unknown)
      << "%\n";
  return kExitOk;
}

int eval(const Options& o, std::ostream& out) {
  resolve(o);
  Dataset val;
  if (!o.val.empty()) {
    require_path(o.data, "benchmark directory (--data)");
    val = load_dataset(o.val, load_benchmark(o.data).target_val.class_space);
  } else {
    require_path(o.data, "benchmark directory (--data)");
    val = load_benchmark(o.data).target_val;
  }
  if (val.empty()) throw ValidationError("validation set is empty");
  const NetworkParams model = load_expanded(o.checkpoint, val.class_space, "checkpoint");
  const MetricsReport report = evaluate(model, val);
  write_atomically(o.out, [&](const fs::path& dir) {
    write_text(dir / "metrics.csv", report_csv(report));
    write_text(dir / "metrics.svg", report_svg(report));
  });
  out << "common " << pct(report.common_miou) << "  private " << pct(report.private_iou) << "\nH-Score "
      << pct(report.h_score) << "\n";
  return kExitOk;
}

int sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve(o);
  std::vector<double> values;
  for (double v : o.tau1_values) {
    if (!(v > 0.0 && v < 1.0)) throw ValidationError("tau1 values must lie in (0,1), got " + std::to_string(v));
    if (std::find(values.begin(), values.end(), v) != values.end()) {
      err << "warning: duplicate tau1 value " << v << " ignored\n";
      continue;
    }
    values.push_back(v);
  }
  if (values.size() < 2) throw ValidationError("sweep-tau1 needs at least 2 distinct values");
  if (o.pipeline != "baseline" && o.pipeline != "sats") {
    throw ValidationError("--pipeline must be 'baseline' or 'sats'");
  }
  require_path(o.data, "benchmark directory (--data)");
  const Benchmark bench = load_benchmark(o.data);
  const auto rows = sweep_tau1(cfg.stage, bench, values,
                               o.pipeline == "sats" ? SweepPipeline::sats : SweepPipeline::baseline,
                               [&](const std::string& msg) { err << msg << "\n" << std::flush; });
  const std::string csv = sweep_csv(rows);
  write_atomically(o.out, [&](const fs::path& dir) { write_text(dir / "sweep_tau1.csv", csv); });
  out << csv;
  return kExitOk;
}

int report(const Options& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve(o);
  AblationConfig ab;
  ab.bench = cfg.bench;
  ab.stage = cfg.stage;
  ab.seeds = o.seeds;
  if (ab.seeds.empty()) throw ValidationError("--seeds must list at least one seed");
  const AblationResult result = run_ablation(ab, [&](const std::string& msg) { err << msg << "\n" << std::flush; });
  const std::string csv = ablation_csv(result);
  write_atomically(o.out, [&](const fs::path& dir) {
    write_text(dir / "ablation.csv", csv);
    write_text(dir / "config.txt", to_text(cfg));
  });
  out << csv;
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Separate-then-adapt training for open-set domain-adaptive segmentation"};
  app.name("sats");
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "key = value configuration file");
  app.add_option("--seed", o.seed, "seed for data generation and training");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--iterations", o.iterations, "training iterations per stage");
  app.add_option("--tau1", o.tau1, "open-set pseudo-label threshold");
  app.add_option("--tau2", o.tau2, "confidence-weight threshold");
  app.add_option("--alpha", o.alpha, "EMA smoothing factor");
  app.add_option("--gamma", o.gamma, "virtual-unknown area fraction");

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic benchmark");

  auto* tr = app.add_subcommand("train", "train one stage");
  tr->add_option("stage", o.stage, "stage1 | stage2 | baseline")
      ->required()
      ->check(CLI::IsMember({"stage1", "stage2", "baseline"}));
  tr->add_option("--data", o.data, "benchmark directory");
  tr->add_option("--detector", o.detector, "Stage I checkpoint");
  tr->add_option("--unk-dir", o.unk_dir, "detected-unknown label maps (from infer-unk)");
  tr->add_flag("--dump-masks", o.dump_masks, "write every Stage II mixup mask under <out>/masks");

  auto* inf = app.add_subcommand("infer-unk", "label target images with a Stage I detector");
  inf->add_option("--data", o.data, "benchmark directory");
  inf->add_option("--detector", o.detector, "Stage I checkpoint");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the target validation split");
  ev->add_option("--data", o.data, "benchmark directory");
  ev->add_option("--checkpoint", o.checkpoint, "model checkpoint");
  ev->add_option("--val", o.val, "alternative validation dataset directory");

  auto* sw = app.add_subcommand("sweep-tau1", "H-Score as a function of tau1");
  sw->add_option("--data", o.data, "benchmark directory");
  sw->add_option("--values", o.tau1_values, "tau1 values")->delimiter(',')->required();
  sw->add_option("--pipeline", o.pipeline, "baseline | sats")->capture_default_str();

  auto* rep = app.add_subcommand("report", "run the four-configuration ablation");
  rep->add_option("--seeds", o.seeds, "seeds to average over")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return gen_data(o, out);
    if (*tr) return train(o, out, err);
    if (*inf) return infer_unk(o, out);
    if (*ev) return eval(o, out);
    if (*sw) return sweep(o, out, err);
    if (*rep) return report(o, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sats::cli
