#include "sats/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "sats/error.hpp"
#include "sats/parallel.hpp"
#include "sats/random.hpp"

namespace sats {
namespace {

enum Stream : std::uint64_t { kInitStream = 11, kLoopStream = 12, kExpandStream = 13 };

enum class SourceMode { plain, virtual_unknowns, unknown_mixup };
enum class TargetLabels { open_set, closed_set };

struct Window {
  int x0, y0, size;
};

Window random_window(Rng& rng, int width, int height, int crop) {
  const int s = std::min({crop, width, height});
  return {uniform_int(rng, 0, width - s), uniform_int(rng, 0, height - s), s};
}

LabeledImage crop(const LabeledImage& img, const Window& w) {
  return LabeledImage(crop(img.pixels, w.x0, w.y0, w.size, w.size), crop(img.label, w.x0, w.y0, w.size, w.size));
}

void check_inputs(const StageConfig& cfg, const Dataset& source, const Dataset& target) {
  cfg.validate();
  source.class_space.validate();
  if (source.class_space.num_known != target.class_space.num_known) {
    throw ValidationError("training: source and target class spaces differ");
  }
  if (cfg.iterations > 0 && (source.empty() || target.empty())) {
    throw ValidationError("training: source and target datasets must be non-empty");
  }
}

ClassSpace effective_space(const StageConfig& cfg, const Dataset& source) {
  ClassSpace cs = source.class_space;
  if (!cfg.head_classes.empty()) cs.head_classes = cfg.head_classes;
  cs.validate();
  return cs;
}

/// Shared student/teacher self-training loop; the stage functions pick how
/// source crops are augmented and how target pseudo labels are formed.
class SelfTrainer {
 public:
  SelfTrainer(const StageConfig& cfg, const ClassSpace& cs, NetworkParams init, const TrainHooks& hooks)
      : cfg_(cfg), cs_(cs), hooks_(hooks), student_(std::move(init)), teacher_(student_),
        optim_(OptimState::for_params(student_, cfg.optimizer)), rng_(derive_seed(cfg.seed, kLoopStream)) {}

  struct Stage2Inputs {
    const Dataset* target;
    const Dataset* detected;
  };

  NetworkParams run(const Dataset& source, const Dataset& target, SourceMode mode, TargetLabels labels,
                    const Stage2Inputs* stage2 = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    const double inv_batch = 1.0 / cfg_.batch_size;
    for (int it = 0; it < cfg_.iterations; ++it) {
      NetworkParams grads = NetworkParams::zeros_like(student_);
      TrainLogRecord rec;
      rec.iteration = it;

      for (int b = 0; b < cfg_.batch_size; ++b) {
        const auto idx = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(source.size()) - 1));
        const LabeledImage& full = source.items[idx];
        LabeledImage img = crop(full, random_window(rng_, full.width(), full.height(), cfg_.crop_size));
        if (mode == SourceMode::virtual_unknowns) {
          auto aug = apply_virtual_unknowns(img, rng_, cfg_.virtual_unknown, cs_);
          if (hooks_.on_virtual_unknown) hooks_.on_virtual_unknown(it, aug.image, aug.mask);
          img = std::move(aug.image);
        } else if (mode == SourceMode::unknown_mixup) {
          img = mix_detected_unknowns(img, *stage2, it);
        }
        auto lg = supervised_loss_and_grad(student_, img.pixels, img.label);
        grads.add_scaled(lg.grads, inv_batch);
        rec.loss_source += lg.loss * inv_batch;
      }

      for (int b = 0; b < cfg_.batch_size; ++b) {
        const auto idx = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(target.size()) - 1));
        const LabeledImage& full = target.items[idx];
        const Window w = random_window(rng_, full.width(), full.height(), cfg_.crop_size);
        const RgbImage px = sats::crop(full.pixels, w.x0, w.y0, w.size, w.size);
        const ProbMap probs = forward(teacher_, px);
        LabelMap pseudo = pseudo_label(probs, labels);
        const double q = confidence_weight(probs, cfg_.pseudo.tau2);
        auto lg = weighted_target_loss_and_grad(student_, px, pseudo, q);
        grads.add_scaled(lg.grads, inv_batch);
        rec.loss_target += lg.loss * inv_batch;
        rec.q_mean += q * inv_batch;
        const auto unknown = static_cast<std::uint8_t>(cs_.unknown_index());
        const auto n_unk = std::count(pseudo.values().begin(), pseudo.values().end(), unknown);
        rec.unknown_fraction += inv_batch * static_cast<double>(n_unk) / static_cast<double>(pseudo.size());
      }

      if (!std::isfinite(rec.loss_source) || !std::isfinite(rec.loss_target)) {
        std::ostringstream os;
        os << "iteration " << it << ": non-finite loss (L_S=" << rec.loss_source << ", L_T=" << rec.loss_target << ")";
        throw NumericError(os.str());
      }
      try {
        optimizer_step(student_, grads, optim_, lr_scale(it));
      } catch (const NumericError& e) {
        throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
      }
      teacher_ = ema_update(teacher_, student_, cfg_.ema_alpha);

      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (hooks_.on_log) hooks_.on_log(rec);
    }
    return student_;
  }

 private:
  double lr_scale(int it) const {
    if (cfg_.warmup_iterations <= 0) return 1.0;
    return std::min(1.0, static_cast<double>(it + 1) / cfg_.warmup_iterations);
  }

  LabelMap pseudo_label(const ProbMap& probs, TargetLabels labels) const {
    LabelMap pseudo = labels == TargetLabels::open_set ? open_set_pseudo_label(probs, cs_, cfg_.pseudo.tau1)
                                                       : closed_set_pseudo_label(probs);
    if (hooks_.refine_pseudo_label) pseudo = hooks_.refine_pseudo_label(std::move(pseudo), probs);
    return pseudo;
  }

  // Pairs a source crop with a uniformly drawn target image and pastes its
  // detected unknowns (refined with hard unknowns after pre-training).
  LabeledImage mix_detected_unknowns(const LabeledImage& src, const Stage2Inputs& in, int it) {
    const auto j = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(in.target->size()) - 1));
    const LabeledImage& tgt = in.target->items[j];
    const LabelMap& det_full = in.detected->items[j].label;
    const Window w = random_window(rng_, tgt.width(), tgt.height(), src.width());
    const RgbImage tgt_px = sats::crop(tgt.pixels, w.x0, w.y0, w.size, w.size);
    const LabelMap det = sats::crop(det_full, w.x0, w.y0, w.size, w.size);

    const BinaryMask detector_mask = extract_unknown_mask(det, cs_);
    const bool hard_phase = it >= cfg_.pretrain_steps;
    BinaryMask mask = detector_mask;
    if (hard_phase) {
      const ProbMap probs = forward(teacher_, tgt_px);
      mask = refine_hard_unknown_mask(det, pseudo_label(probs, TargetLabels::closed_set), cs_);
    }
    if (hooks_.on_mixup_mask) hooks_.on_mixup_mask({it, hard_phase, j, w.x0, w.y0, detector_mask, mask});
    return unknown_mixup(src, tgt_px, mask, cs_);
  }

  const StageConfig& cfg_;
  ClassSpace cs_;
  const TrainHooks& hooks_;
  NetworkParams student_;
  NetworkParams teacher_;
  OptimState optim_;
  Rng rng_;
};

}  // namespace

void StageConfig::validate() const {
  if (iterations < 0) throw ValidationError("stage: iterations must be >= 0");
  if (batch_size < 1) throw ValidationError("stage: batch size must be >= 1");
  if (pretrain_steps < 0) throw ValidationError("stage: pretrain_steps must be >= 0");
  if (crop_size < 8) throw ValidationError("stage: crop size must be >= 8");
  if (!(ema_alpha >= 0.0 && ema_alpha <= 1.0)) throw ValidationError("stage: EMA alpha must be in [0,1]");
  if (warmup_iterations < 0) throw ValidationError("stage: warmup iterations must be >= 0");
  pseudo.validate();
  virtual_unknown.validate();
  optimizer.validate();
}

NetworkParams initial_network(const StageConfig& cfg, int num_known) {
  return expand_head(NetworkParams::initialize(cfg.network, num_known, derive_seed(cfg.seed, kInitStream)),
                     derive_seed(cfg.seed, kExpandStream));
}

NetworkParams run_stage1(const StageConfig& cfg, const Dataset& source, const Dataset& target_train,
                         const TrainHooks& hooks) {
  check_inputs(cfg, source, target_train);
  const ClassSpace cs = effective_space(cfg, source);
  SelfTrainer trainer(cfg, cs, initial_network(cfg, cs.num_known), hooks);
  return trainer.run(source, target_train, SourceMode::virtual_unknowns, TargetLabels::open_set);
}

NetworkParams run_one_stage_baseline(const StageConfig& cfg, const Dataset& source, const Dataset& target_train,
                                     const TrainHooks& hooks) {
  check_inputs(cfg, source, target_train);
  const ClassSpace cs = effective_space(cfg, source);
  SelfTrainer trainer(cfg, cs, initial_network(cfg, cs.num_known), hooks);
  return trainer.run(source, target_train, SourceMode::plain, TargetLabels::open_set);
}

Dataset infer_unknowns(const NetworkParams& detector, const Dataset& target_train) {
  if (!detector.expanded()) throw ValidationError("infer_unknowns: detector must have a K+1 head");
  if (detector.num_known() != target_train.class_space.num_known) {
    throw ValidationError("infer_unknowns: detector and dataset disagree on K");
  }
  Dataset out;
  out.domain = DomainTag::target;
  out.class_space = target_train.class_space;
  out.names = target_train.names;
  out.items.resize(target_train.size());
  parallel_for(target_train.size(), [&](std::size_t i) {
    const auto& px = target_train.items[i].pixels;
    out.items[i] = LabeledImage(px, closed_set_pseudo_label(forward(detector, px)));
  });
  return out;
}

NetworkParams run_stage2(const StageConfig& cfg, const Dataset& source, const Dataset& target_train,
                         const Dataset& detected_unknowns, const TrainHooks& hooks, const NetworkParams* detector) {
  check_inputs(cfg, source, target_train);
  if (detected_unknowns.size() != target_train.size()) {
    throw ValidationError("stage2: detected unknowns must align 1:1 with the target set");
  }
  for (std::size_t i = 0; i < target_train.size(); ++i) {
    if (detected_unknowns.items[i].width() != target_train.items[i].width() ||
        detected_unknowns.items[i].height() != target_train.items[i].height()) {
      throw ValidationError("stage2: detected unknown map " + std::to_string(i) + " has the wrong size");
    }
  }
  const ClassSpace cs = effective_space(cfg, source);
  NetworkParams init;
  if (cfg.stage2_from_detector) {
    if (!detector) throw ValidationError("stage2: stage2_from_detector set but no detector given");
    if (!detector->expanded() || detector->num_known() != cs.num_known) {
      throw ValidationError("stage2: detector head does not match the class space");
    }
    init = *detector;
  } else {
    init = initial_network(cfg, cs.num_known);
  }
  SelfTrainer trainer(cfg, cs, std::move(init), hooks);
  SelfTrainer::Stage2Inputs in{&target_train, &detected_unknowns};
  return trainer.run(source, target_train, SourceMode::unknown_mixup, TargetLabels::closed_set, &in);
}

}  // namespace sats
