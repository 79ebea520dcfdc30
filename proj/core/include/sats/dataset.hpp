#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sats/class_space.hpp"
#include "sats/raster.hpp"

namespace sats {

/// RGB raster paired with a per-pixel class-index label map.
struct LabeledImage {
  RgbImage pixels;
  LabelMap label;

  LabeledImage() = default;
  LabeledImage(RgbImage px, LabelMap lbl);
  /// Unlabeled image: every label pixel is kIgnoreIndex.
  explicit LabeledImage(RgbImage px);

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }

  bool operator==(const LabeledImage&) const = default;
};

enum class DomainTag { source, target, target_val };

std::string_view to_string(DomainTag tag);
DomainTag domain_tag_from_string(std::string_view s);

struct Dataset {
  DomainTag domain = DomainTag::source;
  ClassSpace class_space;
  std::vector<std::string> names;  // parallel to items; used for file names
  std::vector<LabeledImage> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  void push_back(std::string name, LabeledImage img);

  bool operator==(const Dataset&) const = default;
};

struct Violation {
  std::size_t item = 0;
  std::string message;
};

/// Checks every LabeledImage/Dataset invariant; violations are returned, never thrown.
/// `item_spaces`, when non-empty, gives the class space each item was produced
/// under and must agree with the dataset's.
std::vector<Violation> validate_dataset(const Dataset& ds,
                                        const std::vector<ClassSpace>& item_spaces = {});

/// Throws ValidationError if any label value is outside {0..K} ∪ {ignore}.
void check_label_values(const LabelMap& label, const ClassSpace& cs);

}  // namespace sats
