#include "sats/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "sats/error.hpp"
#include "sats/parallel.hpp"
#include "sats/pseudolabel.hpp"

namespace sats {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes < 2) throw ValidationError("confusion matrix needs at least 2 classes");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(const LabelMap& gt, const LabelMap& pred) {
  if (!gt.same_size(pred)) throw ValidationError("accumulate: gt and prediction sizes differ");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= n_) {
      throw ValidationError("accumulate: prediction value " + std::to_string(pred[i]) + " is not a class");
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kIgnoreIndex) continue;
    if (gt[i] >= n_) throw ValidationError("accumulate: ground-truth value " + std::to_string(gt[i]) + " out of range");
    ++counts_[index(gt[i], pred[i])];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw ValidationError("confusion matrix size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& gt, const LabelMap& pred) {
  cm.add(gt, pred);
  return cm;
}

double h_score(double common, double private_iou) {
  const double sum = common + private_iou;
  return sum > 0.0 ? 2.0 * common * private_iou / sum : 0.0;
}

MetricsReport compute_report(const ConfusionMatrix& cm, const ClassSpace& cs) {
  const int n = cs.num_outputs();
  if (cm.num_classes() != n) throw ValidationError("compute_report: matrix does not match class space");
  MetricsReport r;
  for (int c = 0; c < n; ++c) {
    std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
    for (int o = 0; o < n; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) {
      r.per_class_iou.emplace_back();
    } else {
      r.per_class_iou.emplace_back(static_cast<double>(tp) / static_cast<double>(denom));
    }
  }
  double sum = 0.0;
  for (int c = 0; c < cs.num_known; ++c) {
    if (r.per_class_iou[c]) {
      sum += *r.per_class_iou[c];
      ++r.known_classes_averaged;
    }
  }
  r.common_miou = r.known_classes_averaged ? sum / r.known_classes_averaged : 0.0;
  r.private_iou = r.per_class_iou[cs.unknown_index()].value_or(0.0);
  r.h_score = h_score(r.common_miou, r.private_iou);
  return r;
}

ConfusionMatrix evaluate_confusion(const NetworkParams& model, const Dataset& val) {
  const ClassSpace& cs = val.class_space;
  if (model.num_known() != cs.num_known || !model.expanded()) {
    throw ValidationError("evaluate: model head has " + std::to_string(model.num_classes()) + " outputs, expected " +
                          std::to_string(cs.num_outputs()));
  }
  if (val.empty()) throw ValidationError("evaluate: validation set is empty");
  std::vector<ConfusionMatrix> parts(val.size(), ConfusionMatrix(cs.num_outputs()));
  parallel_for(val.size(), [&](std::size_t i) {
    const auto& item = val.items[i];
    parts[i].add(item.label, closed_set_pseudo_label(forward(model, item.pixels)));
  });
  ConfusionMatrix cm(cs.num_outputs());
  for (const auto& p : parts) cm.merge(p);
  return cm;
}

MetricsReport evaluate(const NetworkParams& model, const Dataset& val) {
  return compute_report(evaluate_confusion(model, val), val.class_space);
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::string report_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "class,iou\n";
  for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
    os << (c + 1 == r.per_class_iou.size() ? std::string("unknown") : std::to_string(c)) << ","
       << (r.per_class_iou[c] ? pct(*r.per_class_iou[c]) : std::string("NA")) << "\n";
  }
  os << "common,private,h_score\n" << pct(r.common_miou) << "," << pct(r.private_iou) << "," << pct(r.h_score) << "\n";
  return os.str();
}

std::string report_svg(const MetricsReport& r) {
  struct Bar { std::string label; double value; const char* color; };
  std::vector<Bar> bars;
  for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
    const bool unk = c + 1 == r.per_class_iou.size();
    bars.push_back({unk ? "unknown" : "class " + std::to_string(c), r.per_class_iou[c].value_or(0.0),
                    unk ? "#c0392b" : "#2e86c1"});
  }
  bars.push_back({"common", r.common_miou, "#7f8c8d"});
  bars.push_back({"private", r.private_iou, "#7f8c8d"});
  bars.push_back({"H-Score", r.h_score, "#27ae60"});

  constexpr int kRow = 22, kLabelW = 90, kBarW = 300;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLabelW + kBarW + 70 << "\" height=\""
     << kRow * bars.size() + 10 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int y = 5 + static_cast<int>(i) * kRow;
    os << "  <text x=\"4\" y=\"" << y + 14 << "\">" << bars[i].label << "</text>\n"
       << "  <rect x=\"" << kLabelW << "\" y=\"" << y + 3 << "\" width=\"" << static_cast<int>(kBarW * bars[i].value)
       << "\" height=\"" << kRow - 6 << "\" fill=\"" << bars[i].color << "\"/>\n"
       << "  <text x=\"" << kLabelW + kBarW + 6 << "\" y=\"" << y + 14 << "\">" << pct(bars[i].value) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sats
