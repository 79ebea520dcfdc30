#include "sats/polygon.hpp"

#include <algorithm>
#include <cmath>

namespace sats {

bool Polygon::in_bounds(int width, int height) const {
  return std::all_of(vertices.begin(), vertices.end(), [&](const Point& p) {
    return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
  });
}

namespace {

struct Edge {
  // (x0, y0) is the endpoint with the smaller y.
  double x0, y0, x1, y1;
  int first_row, last_row;

  double x_at(double yc) const { return x0 + (yc - y0) * (x1 - x0) / (y1 - y0); }
};

}  // namespace

BinaryMask rasterize_polygon(const Polygon& poly, int width, int height) {
  if (poly.vertices.size() < 3) throw ValidationError("polygon needs at least 3 vertices");
  BinaryMask mask(width, height);
  if (width == 0 || height == 0) return mask;

  // Edge table bucketed by the first scanline each edge touches.
  std::vector<std::vector<Edge>> table(static_cast<std::size_t>(height));
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    Point a = poly.vertices[i];
    Point b = poly.vertices[(i + 1) % n];
    if (a.y == b.y) continue;
    if (a.y > b.y) std::swap(a, b);
    // Integer endpoints: rows with a.y <= y+0.5 < b.y are a.y .. b.y-1.
    const int first = std::max(a.y, 0);
    const int last = std::min(b.y - 1, height - 1);
    if (first > last) continue;
    table[first].push_back({double(a.x), double(a.y), double(b.x), double(b.y), first, last});
  }

  std::vector<Edge> active;
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    std::erase_if(active, [y](const Edge& e) { return e.last_row < y; });
    active.insert(active.end(), table[y].begin(), table[y].end());
    if (active.empty()) continue;

    const double yc = y + 0.5;
    xs.clear();
    for (const auto& e : active) xs.push_back(e.x_at(yc));
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int from = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int to = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
      for (int x = from; x < to; ++x) mask.set(x, y);
    }
  }
  return mask;
}

}  // namespace sats
