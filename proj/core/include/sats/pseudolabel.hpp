#pragma once

#include "sats/class_space.hpp"
#include "sats/raster.hpp"

namespace sats {

struct PseudoLabelConfig {
  double tau1 = 0.5;    // known-class confidence below which a pixel is labeled unknown
  double tau2 = 0.968;  // confidence above which a pixel counts toward q_t

  void validate() const;
};

/// Per pixel: the most probable *known* class if its probability is >= tau1,
/// otherwise the unknown index. The unknown channel never wins on confidence.
/// Ties go to the lower class index.
LabelMap open_set_pseudo_label(const ProbMap& teacher_probs, const ClassSpace& cs, double tau1);

/// Per-pixel argmax over all K+1 channels, ties to the lower index.
LabelMap closed_set_pseudo_label(const ProbMap& teacher_probs);

/// Fraction of the H×W pixels whose maximum probability over all channels
/// strictly exceeds tau2.
double confidence_weight(const ProbMap& teacher_probs, double tau2);

}  // namespace sats
