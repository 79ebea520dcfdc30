#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sats/augment.hpp"
#include "sats/dataset.hpp"
#include "sats/network.hpp"
#include "sats/optimizer.hpp"
#include "sats/pseudolabel.hpp"

namespace sats {

struct StageConfig {
  int iterations = 4000;
  int batch_size = 2;
  /// Stage II iterations spent in pre-training before hard-unknown
  /// exploration. A value >= iterations means pre-training only.
  int pretrain_steps = 200;
  int crop_size = 32;
  PseudoLabelConfig pseudo;
  VirtualUnknownConfig virtual_unknown;
  double ema_alpha = 0.999;
  std::uint64_t seed = 0;
  /// Overrides the dataset's head classes when non-empty.
  std::vector<int> head_classes;
  AdamWConfig optimizer;
  int warmup_iterations = 0;  // linear learning-rate ramp; 0 disables it
  NetworkShape network;
  /// Stage II starts from the Stage I detector instead of a fresh network.
  bool stage2_from_detector = false;

  void validate() const;
};

struct TrainLogRecord {
  int iteration = 0;
  double loss_source = 0.0;
  double loss_target = 0.0;
  double q_mean = 0.0;
  double unknown_fraction = 0.0;  // share of unknown pixels in this step's target pseudo labels
  double wall_ms = 0.0;
};

struct MixupMaskEvent {
  int iteration;
  bool hard_unknown_phase;
  std::size_t target_index;
  int crop_x, crop_y;               // top-left corner of the target crop
  const BinaryMask& detector_mask;  // unknown mask of the Stage I prediction (crop)
  const BinaryMask& used_mask;      // mask actually used for mixup
};

struct TrainHooks {
  std::function<void(const TrainLogRecord&)> on_log;
  /// Post-processes every pseudo label before use; identity when unset.
  std::function<LabelMap(LabelMap pseudo, const ProbMap& teacher_probs)> refine_pseudo_label;
  std::function<void(const MixupMaskEvent&)> on_mixup_mask;
  /// Called with each virtual-unknown augmented source crop (Stage I).
  std::function<void(int iteration, const LabeledImage& augmented, const BinaryMask& mask)> on_virtual_unknown;
};

/// Known/unknown separation: expanded-head self-training with virtual unknowns
/// pasted into every source crop and open-set pseudo labels on the target.
NetworkParams run_stage1(const StageConfig& cfg, const Dataset& source, const Dataset& target_train,
                         const TrainHooks& hooks = {});

/// Closed-set argmax segmentation of every target image by the detector.
/// Output is aligned 1:1 with the input and tagged as a target dataset.
Dataset infer_unknowns(const NetworkParams& detector, const Dataset& target_train);

/// Unknown-aware adaptation. Source crops are mixed with detected target
/// unknowns; after cfg.pretrain_steps the mixup mask is refined each step with
/// hard unknowns from the teacher's closed-set pseudo label. `detector` is
/// required only when cfg.stage2_from_detector is set.
NetworkParams run_stage2(const StageConfig& cfg, const Dataset& source, const Dataset& target_train,
                         const Dataset& detected_unknowns, const TrainHooks& hooks = {},
                         const NetworkParams* detector = nullptr);

/// One-stage head-expansion self-training: plain source supervision plus
/// open-set pseudo labels on the target.
NetworkParams run_one_stage_baseline(const StageConfig& cfg, const Dataset& source, const Dataset& target_train,
                                     const TrainHooks& hooks = {});

/// Initial expanded-head network for a given config and class count.
NetworkParams initial_network(const StageConfig& cfg, int num_known);

}  // namespace sats
