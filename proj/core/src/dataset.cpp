#include "sats/dataset.hpp"

#include <set>
#include <sstream>

#include "sats/error.hpp"

namespace sats {

LabeledImage::LabeledImage(RgbImage px, LabelMap lbl) : pixels(std::move(px)), label(std::move(lbl)) {
  if (!label.same_size(pixels.width(), pixels.height())) {
    throw ValidationError("labeled image: pixel and label dimensions differ");
  }
}

LabeledImage::LabeledImage(RgbImage px)
    : pixels(std::move(px)), label(pixels.width(), pixels.height(), kIgnoreIndex) {}

std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::source: return "source";
    case DomainTag::target: return "target";
    case DomainTag::target_val: return "target_val";
  }
  return "?";
}

DomainTag domain_tag_from_string(std::string_view s) {
  if (s == "source") return DomainTag::source;
  if (s == "target") return DomainTag::target;
  if (s == "target_val") return DomainTag::target_val;
  throw ValidationError("unknown domain tag '" + std::string(s) + "'");
}

void Dataset::push_back(std::string name, LabeledImage img) {
  names.push_back(std::move(name));
  items.push_back(std::move(img));
}

void check_label_values(const LabelMap& label, const ClassSpace& cs) {
  for (int y = 0; y < label.height(); ++y) {
    for (int x = 0; x < label.width(); ++x) {
      const int v = label(x, y);
      if (v != kIgnoreIndex && v > cs.unknown_index()) {
        std::ostringstream os;
        os << "label value " << v << " at pixel (" << x << "," << y << ") exceeds unknown index "
           << cs.unknown_index();
        throw ValidationError(os.str());
      }
    }
  }
}

std::vector<Violation> validate_dataset(const Dataset& ds, const std::vector<ClassSpace>& item_spaces) {
  std::vector<Violation> out;
  try {
    ds.class_space.validate();
  } catch (const ValidationError& e) {
    out.push_back({0, e.what()});
    return out;
  }
  if (ds.names.size() != ds.items.size()) {
    out.push_back({0, "names and items differ in length"});
  }
  std::set<std::string> seen;
  for (const auto& n : ds.names) {
    if (!seen.insert(n).second) out.push_back({0, "duplicate item name '" + n + "'"});
  }
  if (!item_spaces.empty() && item_spaces.size() != ds.items.size()) {
    out.push_back({0, "item class-space list does not match item count"});
  }

  const int unknown = ds.class_space.unknown_index();
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& item = ds.items[i];
    if (i < item_spaces.size() && !(item_spaces[i] == ds.class_space)) {
      out.push_back({i, "item class space " + to_string(item_spaces[i]) + " differs from dataset " +
                            to_string(ds.class_space)});
    }
    if (!item.label.same_size(item.pixels.width(), item.pixels.height())) {
      out.push_back({i, "pixel and label dimensions differ"});
      continue;
    }
    std::size_t bad = 0, unknown_px = 0;
    for (auto v : item.label.values()) {
      if (v == kIgnoreIndex) continue;
      if (v > unknown) ++bad;
      if (v == unknown) ++unknown_px;
    }
    if (bad) out.push_back({i, std::to_string(bad) + " label values outside {0..K} and ignore"});
    if (ds.domain == DomainTag::source && unknown_px) {
      out.push_back({i, std::to_string(unknown_px) +
                            " source pixels labeled unknown (source data holds known classes only)"});
    }
  }
  return out;
}

}  // namespace sats
