#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sats/error.hpp"

namespace sats {

/// Single-channel H×W grid, row-major.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool same_size(int width, int height) const { return width_ == width && height_ == height; }
  template <typename U>
  bool same_size(const Plane<U>& other) const {
    return same_size(other.width(), other.height());
  }

  bool operator==(const Plane&) const = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) throw ValidationError("negative raster dimensions");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Per-pixel class indices in {0..K} ∪ {kIgnoreIndex}.
using LabelMap = Plane<std::uint8_t>;

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster stored interleaved (HWC).
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }

  Rgb pixel(int x, int y) const {
    const auto* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set_pixel(int x, int y, Rgb c) {
    auto* p = &data_[offset(x, y)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  std::uint8_t& at(int x, int y, int channel) { return data_[offset(x, y) + channel]; }
  std::uint8_t at(int x, int y, int channel) const { return data_[offset(x, y) + channel]; }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t offset(int x, int y) const {
    return 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x));
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Strictly {0,1}-valued H×W mask.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false) : bits_(width, height, fill ? 1 : 0) {}

  int width() const { return bits_.width(); }
  int height() const { return bits_.height(); }
  std::size_t size() const { return bits_.size(); }

  bool operator()(int x, int y) const { return bits_(x, y) != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(int x, int y, bool on = true) { bits_(x, y) = on ? 1 : 0; }
  void set(std::size_t i, bool on = true) { bits_[i] = on ? 1 : 0; }

  std::size_t count() const;
  /// Pointwise self ⊇ other. Sizes must match.
  bool contains(const BinaryMask& other) const;
  BinaryMask& operator|=(const BinaryMask& other);

  const Plane<std::uint8_t>& plane() const { return bits_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  Plane<std::uint8_t> bits_;
};

/// Per-pixel categorical distribution over C classes, stored pixel-major (HWC).
class ProbMap {
 public:
  ProbMap() = default;
  ProbMap(int width, int height, int channels)
      : width_(width), height_(height), channels_(channels),
        probs_(static_cast<std::size_t>(width) * height * channels, 0.0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  std::span<double> pixel(int x, int y) {
    return {probs_.data() + pixel_offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int x, int y) const {
    return {probs_.data() + pixel_offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(std::size_t i) const {
    return {probs_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<double> pixel(std::size_t i) {
    return {probs_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }
  std::size_t num_pixels() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<double> values() { return probs_; }
  std::span<const double> values() const { return probs_; }

  /// Largest deviation of a pixel's total mass from 1, or of any entry from [0,1].
  double normalization_error() const;

  bool operator==(const ProbMap&) const = default;

 private:
  std::size_t pixel_offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> probs_;
};

/// Copies the w×h window at (x0, y0).
RgbImage crop(const RgbImage& img, int x0, int y0, int w, int h);
LabelMap crop(const LabelMap& map, int x0, int y0, int w, int h);

}  // namespace sats
