#include "sats/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sats {

void VirtualUnknownConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("virtual unknowns: gamma must be in (0,1)");
  if (min_vertices < 3) throw ValidationError("virtual unknowns: min_vertices must be >= 3");
  if (max_vertices < min_vertices) {
    throw ValidationError("virtual unknowns: max_vertices must be >= min_vertices");
  }
  if (polygons_per_image < 1) throw ValidationError("virtual unknowns: polygons_per_image must be >= 1");
}

namespace {

void check_same_size(int w, int h, int w2, int h2, const char* what) {
  if (w != w2 || h != h2) throw ValidationError(std::string(what) + ": dimension mismatch");
}

// Rescales the vertex set about its centroid and shifts it back inside the raster.
Polygon rescale(const Polygon& poly, double scale, int width, int height) {
  double cx = 0.0, cy = 0.0;
  for (const auto& p : poly.vertices) {
    cx += p.x;
    cy += p.y;
  }
  cx /= poly.vertices.size();
  cy /= poly.vertices.size();

  std::vector<double> xs, ys;
  for (const auto& p : poly.vertices) {
    xs.push_back(cx + scale * (p.x - cx));
    ys.push_back(cy + scale * (p.y - cy));
  }
  auto fit = [](std::vector<double>& v, int extent) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double shift = 0.0;
    if (*lo < 0.0) shift = -*lo;
    else if (*hi > extent - 1) shift = (extent - 1) - *hi;
    for (auto& c : v) c = std::clamp(std::round(c + shift), 0.0, double(extent - 1));
  };
  fit(xs, width);
  fit(ys, height);

  Polygon out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.vertices.push_back({static_cast<int>(xs[i]), static_cast<int>(ys[i])});
  }
  return out;
}

}  // namespace

Polygon sample_polygon(Rng& rng, int width, int height, const VirtualUnknownConfig& cfg) {
  cfg.validate();
  if (width < 4 || height < 4) throw ValidationError("sample_polygon: raster must be at least 4x4");
  const double target = cfg.gamma * width * height / cfg.polygons_per_image;

  Polygon best;
  double best_err = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 100; ++attempt) {
    Polygon poly;
    const int n = uniform_int(rng, cfg.min_vertices, cfg.max_vertices);
    for (int i = 0; i < n; ++i) {
      poly.vertices.push_back({uniform_int(rng, 0, width - 1), uniform_int(rng, 0, height - 1)});
    }
    const auto raw_area = static_cast<double>(rasterize_polygon(poly, width, height).count());
    if (raw_area > 0.0) poly = rescale(poly, std::sqrt(target / raw_area), width, height);

    const auto area = static_cast<double>(rasterize_polygon(poly, width, height).count());
    const double err = std::abs(area - target);
    if (err < best_err) {
      best_err = err;
      best = poly;
    }
    if (area >= 0.5 * target && area <= 1.5 * target) return poly;
  }
  return best;
}

LabeledImage compose_virtual_unknown(const LabeledImage& src, const BinaryMask& mask, Rgb color,
                                     const ClassSpace& cs) {
  check_same_size(src.width(), src.height(), mask.width(), mask.height(), "compose_virtual_unknown");
  LabeledImage out = src;
  const auto unknown = static_cast<std::uint8_t>(cs.unknown_index());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (!mask(x, y)) continue;
      out.pixels.set_pixel(x, y, color);
      out.label(x, y) = unknown;
    }
  }
  return out;
}

VirtualUnknownSample apply_virtual_unknowns(const LabeledImage& src, Rng& rng,
                                            const VirtualUnknownConfig& cfg, const ClassSpace& cs) {
  VirtualUnknownSample out{src, BinaryMask(src.width(), src.height())};
  for (int i = 0; i < cfg.polygons_per_image; ++i) {
    const Polygon poly = sample_polygon(rng, src.width(), src.height(), cfg);
    const BinaryMask m = rasterize_polygon(poly, src.width(), src.height());
    const Rgb color{static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
                    static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
                    static_cast<std::uint8_t>(uniform_int(rng, 0, 255))};
    out.image = compose_virtual_unknown(out.image, m, color, cs);
    out.mask |= m;
  }
  return out;
}

BinaryMask extract_unknown_mask(const LabelMap& pred, const ClassSpace& cs) {
  BinaryMask mask(pred.width(), pred.height());
  const int unknown = cs.unknown_index();
  for (std::size_t i = 0; i < pred.size(); ++i) mask.set(i, pred[i] == unknown);
  return mask;
}

LabeledImage unknown_mixup(const LabeledImage& src, const RgbImage& target, const BinaryMask& mask,
                           const ClassSpace& cs) {
  check_same_size(src.width(), src.height(), target.width(), target.height(), "unknown_mixup");
  check_same_size(src.width(), src.height(), mask.width(), mask.height(), "unknown_mixup");
  LabeledImage out = src;
  const auto unknown = static_cast<std::uint8_t>(cs.unknown_index());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (!mask(x, y)) continue;
      out.pixels.set_pixel(x, y, target.pixel(x, y));
      out.label(x, y) = unknown;
    }
  }
  return out;
}

BinaryMask refine_hard_unknown_mask(const LabelMap& detector_pred, const LabelMap& pseudo_label,
                                    const ClassSpace& cs) {
  check_same_size(detector_pred.width(), detector_pred.height(), pseudo_label.width(),
                  pseudo_label.height(), "refine_hard_unknown_mask");
  BinaryMask mask(detector_pred.width(), detector_pred.height());
  const int unknown = cs.unknown_index();
  for (std::size_t i = 0; i < detector_pred.size(); ++i) {
    const int det = detector_pred[i];
    mask.set(i, det == unknown || (pseudo_label[i] == unknown && cs.is_head(det)));
  }
  return mask;
}

}  // namespace sats
