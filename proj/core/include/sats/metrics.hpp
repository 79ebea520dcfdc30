#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sats/class_space.hpp"
#include "sats/dataset.hpp"
#include "sats/network.hpp"

namespace sats {

/// (K+1)×(K+1) pixel counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return n_; }
  std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
  std::uint64_t& at(int gt, int pred) { return counts_[index(gt, pred)]; }
  std::uint64_t total() const;

  /// Adds every non-ignore ground-truth pixel. Predictions must be total:
  /// an ignore (or out-of-range) prediction is a ValidationError.
  void add(const LabelMap& gt, const LabelMap& pred);
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index(int gt, int pred) const {
    return static_cast<std::size_t>(gt) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(pred);
  }
  int n_ = 0;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& gt, const LabelMap& pred);

/// All values are fractions in [0,1].
struct MetricsReport {
  std::vector<std::optional<double>> per_class_iou;  // K+1 entries; empty when TP+FP+FN = 0
  double common_miou = 0.0;   // mean over known classes with a defined IoU
  double private_iou = 0.0;   // unknown-class IoU (0 when undefined)
  double h_score = 0.0;
  int known_classes_averaged = 0;
};

/// Harmonic mean 2cp/(c+p), or 0 when c+p = 0.
double h_score(double common, double private_iou);

MetricsReport compute_report(const ConfusionMatrix& cm, const ClassSpace& cs);

/// Full (K+1)-way argmax inference over `val`, accumulated into one report.
MetricsReport evaluate(const NetworkParams& model, const Dataset& val);
ConfusionMatrix evaluate_confusion(const NetworkParams& model, const Dataset& val);

/// `class,iou` rows then a `common,private,h_score` summary, percentages with 2 decimals.
std::string report_csv(const MetricsReport& report);
/// Horizontal bar chart of per-class IoU plus the three summary scores.
std::string report_svg(const MetricsReport& report);

}  // namespace sats
