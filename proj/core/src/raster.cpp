#include "sats/raster.hpp"

#include <cmath>
#include <numeric>

namespace sats {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("negative raster dimensions");
  data_.resize(3 * static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

std::size_t BinaryMask::count() const {
  auto v = bits_.values();
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

bool BinaryMask::contains(const BinaryMask& other) const {
  if (!bits_.same_size(other.bits_)) throw ValidationError("mask size mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (other.bits_[i] && !bits_[i]) return false;
  }
  return true;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  if (!bits_.same_size(other.bits_)) throw ValidationError("mask size mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

double ProbMap::normalization_error() const {
  double worst = 0.0;
  for (std::size_t p = 0; p < num_pixels(); ++p) {
    auto px = pixel(p);
    double total = 0.0;
    for (double v : px) {
      total += v;
      if (v < 0.0) worst = std::max(worst, -v);
      if (v > 1.0) worst = std::max(worst, v - 1.0);
      if (!std::isfinite(v)) return INFINITY;
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

namespace {

void check_window(int src_w, int src_h, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > src_w || y0 + h > src_h) {
    throw ValidationError("crop window outside raster");
  }
}

}  // namespace

RgbImage crop(const RgbImage& img, int x0, int y0, int w, int h) {
  check_window(img.width(), img.height(), x0, y0, w, h);
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.set_pixel(x, y, img.pixel(x0 + x, y0 + y));
  }
  return out;
}

LabelMap crop(const LabelMap& map, int x0, int y0, int w, int h) {
  check_window(map.width(), map.height(), x0, y0, w, h);
  LabelMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = map(x0 + x, y0 + y);
  }
  return out;
}

}  // namespace sats
