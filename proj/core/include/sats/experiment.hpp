#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sats/metrics.hpp"
#include "sats/synthbench.hpp"
#include "sats/trainer.hpp"

namespace sats {

/// Result of the full two-stage pipeline on one benchmark.
struct SatsRun {
  NetworkParams detector;
  Dataset detected_unknowns;
  NetworkParams model;
};

/// Stage I, unknown inference, then Stage II.
SatsRun run_sats(const StageConfig& cfg, const Benchmark& bench, const TrainHooks& hooks = {});

/// Detector diagnostics.
struct DetectorStats {
  double images_with_unknown = 0.0;   // share of target-train maps with >= 1 unknown pixel
  double val_unknown_fraction = 0.0;  // share of target-val pixels predicted unknown
};

DetectorStats detector_stats(const NetworkParams& detector, const Dataset& detected_unknowns, const Dataset& val);

/// The four ablation configurations:
///   A  one-stage head-expansion baseline
///   B  Stage I detector evaluated directly
///   C  Stage II pre-training only (no hard-unknown exploration)
///   D  full two-stage pipeline
struct AblationSeedResult {
  std::uint64_t seed = 0;
  MetricsReport a, b, c, d;
  DetectorStats detector;
};

struct AblationSummary {
  double common = 0.0;
  double private_iou = 0.0;
  double h_score = 0.0;
};

struct AblationResult {
  std::vector<AblationSeedResult> seeds;

  /// Mean over seeds for config 'A'..'D'.
  AblationSummary mean(char config) const;
};

struct AblationConfig {
  BenchConfig bench;
  StageConfig stage;
  /// Each seed drives both benchmark generation and training.
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

using ProgressFn = std::function<void(const std::string&)>;

AblationResult run_ablation(const AblationConfig& cfg, const ProgressFn& progress = {});

/// Per-seed rows plus a mean row per config, percentages with 2 decimals.
std::string ablation_csv(const AblationResult& result);

enum class SweepPipeline { baseline, sats };

struct SweepRow {
  double tau1 = 0.0;
  MetricsReport report;
};

/// Trains the chosen pipeline once per tau1 value on `bench` and evaluates on its target_val split.
std::vector<SweepRow> sweep_tau1(const StageConfig& cfg, const Benchmark& bench, const std::vector<double>& values,
                                 SweepPipeline pipeline, const ProgressFn& progress = {});

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace sats
