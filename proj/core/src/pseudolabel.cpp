#include "sats/pseudolabel.hpp"

#include "sats/error.hpp"

namespace sats {

void PseudoLabelConfig::validate() const {
  if (!(tau1 > 0.0 && tau1 < 1.0)) throw ValidationError("pseudo labels: tau1 must be in (0,1)");
  if (!(tau2 > 0.0 && tau2 < 1.0)) throw ValidationError("pseudo labels: tau2 must be in (0,1)");
}

namespace {

// Index of the first maximum among the first `n` entries.
int first_argmax(std::span<const double> p, int n) {
  int best = 0;
  for (int k = 1; k < n; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

}  // namespace

LabelMap open_set_pseudo_label(const ProbMap& teacher_probs, const ClassSpace& cs, double tau1) {
  if (teacher_probs.channels() != cs.num_outputs()) {
    throw ValidationError("open_set_pseudo_label: expected K+1 channels");
  }
  LabelMap out(teacher_probs.width(), teacher_probs.height());
  const auto unknown = static_cast<std::uint8_t>(cs.unknown_index());
  for (std::size_t i = 0; i < teacher_probs.num_pixels(); ++i) {
    const auto p = teacher_probs.pixel(i);
    const int k = first_argmax(p, cs.num_known);
    out[i] = p[k] >= tau1 ? static_cast<std::uint8_t>(k) : unknown;
  }
  return out;
}

LabelMap closed_set_pseudo_label(const ProbMap& teacher_probs) {
  LabelMap out(teacher_probs.width(), teacher_probs.height());
  for (std::size_t i = 0; i < teacher_probs.num_pixels(); ++i) {
    out[i] = static_cast<std::uint8_t>(first_argmax(teacher_probs.pixel(i), teacher_probs.channels()));
  }
  return out;
}

double confidence_weight(const ProbMap& teacher_probs, double tau2) {
  const std::size_t n = teacher_probs.num_pixels();
  if (n == 0) return 0.0;
  std::size_t confident = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = teacher_probs.pixel(i);
    if (p[first_argmax(p, teacher_probs.channels())] > tau2) ++confident;
  }
  return static_cast<double>(confident) / static_cast<double>(n);
}

}  // namespace sats
