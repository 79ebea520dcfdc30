#include "sats/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "sats/error.hpp"

namespace sats {
namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void say(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

}  // namespace

SatsRun run_sats(const StageConfig& cfg, const Benchmark& bench, const TrainHooks& hooks) {
  SatsRun run;
  run.detector = run_stage1(cfg, bench.source, bench.target_train, hooks);
  run.detected_unknowns = infer_unknowns(run.detector, bench.target_train);
  run.model = run_stage2(cfg, bench.source, bench.target_train, run.detected_unknowns, hooks, &run.detector);
  return run;
}

DetectorStats detector_stats(const NetworkParams& detector, const Dataset& detected_unknowns, const Dataset& val) {
  DetectorStats s;
  const auto unknown = static_cast<std::uint8_t>(detected_unknowns.class_space.unknown_index());
  std::size_t with_unknown = 0;
  for (const auto& item : detected_unknowns.items) {
    const auto v = item.label.values();
    if (std::find(v.begin(), v.end(), unknown) != v.end()) ++with_unknown;
  }
  if (!detected_unknowns.empty()) {
    s.images_with_unknown = static_cast<double>(with_unknown) / static_cast<double>(detected_unknowns.size());
  }
  const ConfusionMatrix cm = evaluate_confusion(detector, val);
  std::uint64_t predicted_unknown = 0;
  for (int g = 0; g < cm.num_classes(); ++g) predicted_unknown += cm.at(g, cm.num_classes() - 1);
  if (cm.total() > 0) s.val_unknown_fraction = static_cast<double>(predicted_unknown) / static_cast<double>(cm.total());
  return s;
}

AblationSummary AblationResult::mean(char config) const {
  AblationSummary m;
  if (seeds.empty()) return m;
  for (const auto& s : seeds) {
    const MetricsReport* r = nullptr;
    switch (config) {
      case 'A': r = &s.a; break;
      case 'B': r = &s.b; break;
      case 'C': r = &s.c; break;
      case 'D': r = &s.d; break;
      default: throw ValidationError(std::string("unknown ablation config ") + config);
    }
    m.common += r->common_miou;
    m.private_iou += r->private_iou;
    m.h_score += r->h_score;
  }
  const double n = static_cast<double>(seeds.size());
  m.common /= n;
  m.private_iou /= n;
  m.h_score /= n;
  return m;
}

AblationResult run_ablation(const AblationConfig& cfg, const ProgressFn& progress) {
  if (cfg.seeds.empty()) throw ValidationError("ablation: at least one seed required");
  AblationResult result;
  for (const auto seed : cfg.seeds) {
    BenchConfig bench_cfg = cfg.bench;
    bench_cfg.seed = seed;
    StageConfig stage = cfg.stage;
    stage.seed = seed;
    const Benchmark bench = generate_benchmark(bench_cfg);

    AblationSeedResult row;
    row.seed = seed;
    say(progress, "seed " + std::to_string(seed) + ": config A (one-stage baseline)");
    row.a = evaluate(run_one_stage_baseline(stage, bench.source, bench.target_train), bench.target_val);

    say(progress, "seed " + std::to_string(seed) + ": config B (Stage I detector)");
    const NetworkParams detector = run_stage1(stage, bench.source, bench.target_train);
    row.b = evaluate(detector, bench.target_val);
    const Dataset detected = infer_unknowns(detector, bench.target_train);
    row.detector = detector_stats(detector, detected, bench.target_val);

    say(progress, "seed " + std::to_string(seed) + ": config C (Stage II pre-training only)");
    StageConfig phase_a_only = stage;
    phase_a_only.pretrain_steps = stage.iterations;
    row.c = evaluate(run_stage2(phase_a_only, bench.source, bench.target_train, detected, {}, &detector),
                     bench.target_val);

    say(progress, "seed " + std::to_string(seed) + ": config D (full pipeline)");
    row.d = evaluate(run_stage2(stage, bench.source, bench.target_train, detected, {}, &detector), bench.target_val);
    result.seeds.push_back(std::move(row));
  }
  return result;
}

std::string ablation_csv(const AblationResult& result) {
  std::ostringstream os;
  os << "seed,config,common,private,h_score\n";
  for (const auto& s : result.seeds) {
    const std::pair<char, const MetricsReport*> rows[] = {{'A', &s.a}, {'B', &s.b}, {'C', &s.c}, {'D', &s.d}};
    for (const auto& [name, r] : rows) {
      os << s.seed << "," << name << "," << pct(r->common_miou) << "," << pct(r->private_iou) << ","
         << pct(r->h_score) << "\n";
    }
  }
  for (char c : {'A', 'B', 'C', 'D'}) {
    const auto m = result.mean(c);
    os << "mean," << c << "," << pct(m.common) << "," << pct(m.private_iou) << "," << pct(m.h_score) << "\n";
  }
  return os.str();
}

std::vector<SweepRow> sweep_tau1(const StageConfig& cfg, const Benchmark& bench, const std::vector<double>& values,
                                 SweepPipeline pipeline, const ProgressFn& progress) {
  std::vector<SweepRow> rows;
  for (double tau1 : values) {
    StageConfig c = cfg;
    c.pseudo.tau1 = tau1;
    c.validate();
    say(progress, "tau1=" + pct(tau1 / 100.0));
    const NetworkParams model = pipeline == SweepPipeline::baseline
                                    ? run_one_stage_baseline(c, bench.source, bench.target_train)
                                    : run_sats(c, bench).model;
    rows.push_back({tau1, evaluate(model, bench.target_val)});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "tau1,common,private,h_score\n";
  for (const auto& r : rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r.tau1);
    os << buf << "," << pct(r.report.common_miou) << "," << pct(r.report.private_iou) << "," << pct(r.report.h_score)
       << "\n";
  }
  return os.str();
}

}  // namespace sats
