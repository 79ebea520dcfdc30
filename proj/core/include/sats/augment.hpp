#pragma once

#include "sats/class_space.hpp"
#include "sats/dataset.hpp"
#include "sats/polygon.hpp"
#include "sats/random.hpp"

namespace sats {

/// Virtual-unknown generation parameters.
struct VirtualUnknownConfig {
  double gamma = 0.25;  // target fraction of image area covered by virtual unknowns
  int min_vertices = 3;
  int max_vertices = 8;
  int polygons_per_image = 1;

  void validate() const;
};

/// Samples random vertices in order, rescales about their centroid so the
/// filled area approaches gamma*W*H/polygons_per_image, and accepts the first
/// candidate within ±50% of that target. After 100 attempts the closest
/// candidate is returned.
Polygon sample_polygon(Rng& rng, int width, int height, const VirtualUnknownConfig& cfg);

/// pixels = x⊙(1−m) + c·m, label = y⊙(1−m) + unknown·m. Masked ignore pixels become unknown.
LabeledImage compose_virtual_unknown(const LabeledImage& src, const BinaryMask& mask, Rgb color,
                                     const ClassSpace& cs);

struct VirtualUnknownSample {
  LabeledImage image;
  BinaryMask mask;  // union of all pasted polygons
};

/// Pastes cfg.polygons_per_image polygons, each with a uniformly random RGB color.
VirtualUnknownSample apply_virtual_unknowns(const LabeledImage& src, Rng& rng,
                                            const VirtualUnknownConfig& cfg, const ClassSpace& cs);

/// mask[p] = 1 iff pred[p] is the unknown index.
BinaryMask extract_unknown_mask(const LabelMap& pred, const ClassSpace& cs);

/// pixels = m⊙x_t + (1−m)⊙x_s, label = m·unknown + (1−m)⊙y_s.
LabeledImage unknown_mixup(const LabeledImage& src, const RgbImage& target, const BinaryMask& mask,
                           const ClassSpace& cs);

/// Hard-unknown refinement: a pixel is set when the detector called it unknown,
/// or when the current pseudo label is unknown while the detector assigned a
/// head class (cs.head_classes).
BinaryMask refine_hard_unknown_mask(const LabelMap& detector_pred, const LabelMap& pseudo_label,
                                    const ClassSpace& cs);

}  // namespace sats
