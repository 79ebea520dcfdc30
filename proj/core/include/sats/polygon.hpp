#pragma once

#include <vector>

#include "sats/raster.hpp"

namespace sats {

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

/// Closed polygon; the last vertex connects back to the first.
struct Polygon {
  std::vector<Point> vertices;

  bool in_bounds(int width, int height) const;
  bool operator==(const Polygon&) const = default;
};

/// Scanline fill under the even-odd rule, sampled at pixel centers (x+0.5, y+0.5).
///
/// An edge participates in row y when ymin <= y+0.5 < ymax, and a span between
/// consecutive sorted crossings [xa, xb) covers pixel x when xa <= x+0.5 < xb.
/// Vertices outside the raster are allowed and clip naturally. Degenerate
/// (zero-area) polygons produce an empty mask. Throws for fewer than 3 vertices.
BinaryMask rasterize_polygon(const Polygon& poly, int width, int height);

}  // namespace sats
