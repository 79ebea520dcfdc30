#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sats/dataset.hpp"
#include "sats/random.hpp"

namespace sats {

/// Target-domain appearance shift: per-channel affine color map followed by
/// additive Gaussian pixel noise.
struct DomainShift {
  std::array<double, 3> gain{0.7, 0.85, 1.15};
  std::array<double, 3> bias{35.0, 10.0, -25.0};
  double noise_std = 10.0;

  static DomainShift identity() { return {{1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.0}; }
  Rgb apply(Rgb c, Rng& rng) const;
};

struct BenchConfig {
  int image_size = 64;
  int num_known = 3;    // includes the background class 0
  int num_private = 2;
  int train_count = 200;
  int val_count = 50;
  DomainShift shift;
  /// 0 places private-class hues halfway between known hues; 1 gives them
  /// the hue of their nearest known class.
  double hue_overlap = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  ClassSpace class_space() const;
};

enum class ShapeKind { rectangle, circle, triangle, cross, ring };

/// Shape drawn for a foreground class. Known classes are 1..K-1; private
/// classes are numbered K..K+K'-1 before being collapsed into unknown.
ShapeKind shape_for_class(int raw_class, int num_known);
/// Base hue in degrees for a foreground class (same numbering as above).
double hue_for_class(int raw_class, const BenchConfig& cfg);

struct Benchmark {
  Dataset source;
  Dataset target_train;
  Dataset target_val;
};

/// Pure function of cfg (and cfg.seed). Head classes are set to the background
/// plus the most frequent foreground known class of the source split.
Benchmark generate_benchmark(const BenchConfig& cfg);

/// Per-class pixel counts over non-ignore pixels, indexed 0..K (unknown last).
std::vector<std::uint64_t> class_pixel_frequencies(const Dataset& ds);

/// The `count` most frequent known classes, ties to the lower index.
std::vector<int> select_head_classes(const std::vector<std::uint64_t>& freqs, const ClassSpace& cs,
                                     int count = 2);

}  // namespace sats
