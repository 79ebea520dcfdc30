#include "sats/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sats/parallel.hpp"
#include "sats/random.hpp"

namespace sats {
namespace {

constexpr double kPi = 3.14159265358979323846;

enum Stream : std::uint64_t { kSourceStream = 1, kTargetTrainStream = 2, kTargetValStream = 3 };

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = v - c;
  return {to_byte(255.0 * (r + m)), to_byte(255.0 * (g + m)), to_byte(255.0 * (b + m))};
}

struct Shape {
  ShapeKind kind;
  double cx, cy, r;
  double half_w, half_h;  // rectangles only

  bool contains(double px, double py) const {
    const double dx = px - cx, dy = py - cy;
    switch (kind) {
      case ShapeKind::rectangle: return std::abs(dx) <= half_w && std::abs(dy) <= half_h;
      case ShapeKind::circle: return dx * dx + dy * dy <= r * r;
      case ShapeKind::triangle: {
        // Upward isosceles triangle with apex (cx, cy-r) and base y = cy+r.
        if (dy < -r || dy > r) return false;
        const double half_width = r * (dy + r) / (2.0 * r);
        return std::abs(dx) <= half_width;
      }
      case ShapeKind::cross: {
        const double t = 0.3 * r;
        return (std::abs(dx) <= t && std::abs(dy) <= r) || (std::abs(dy) <= t && std::abs(dx) <= r);
      }
      case ShapeKind::ring: {
        const double d2 = dx * dx + dy * dy;
        return d2 <= r * r && d2 >= 0.3025 * r * r;  // inner radius 0.55 r
      }
    }
    return false;
  }
};

// Smooth low-saturation background texture.
void paint_background(RgbImage& img, Rng& rng) {
  const double hue = uniform_real(rng, 0.0, 360.0);
  const double sat = uniform_real(rng, 0.04, 0.15);
  struct Wave { double fx, fy, phase, amp; };
  std::array<Wave, 3> waves;
  for (auto& w : waves) {
    w = {uniform_real(rng, -0.15, 0.15), uniform_real(rng, -0.15, 0.15), uniform_real(rng, 0.0, 2 * kPi),
         uniform_real(rng, 0.03, 0.08)};
  }
  const double base = uniform_real(rng, 0.4, 0.6);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double v = base;
      for (const auto& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
      img.set_pixel(x, y, hsv_to_rgb(hue, sat, std::clamp(v, 0.0, 1.0)));
    }
  }
}

Shape random_shape(ShapeKind kind, int size, Rng& rng) {
  const double r = uniform_real(rng, 0.09, 0.2) * size;
  const double margin = 0.5 * r;
  Shape s{kind, uniform_real(rng, margin, size - margin), uniform_real(rng, margin, size - margin), r, 0, 0};
  s.half_w = uniform_real(rng, 0.6, 1.0) * r;
  s.half_h = uniform_real(rng, 0.6, 1.0) * r;
  return s;
}

void paint_object(RgbImage& img, LabelMap& label, int raw_class, std::uint8_t label_value,
                  const BenchConfig& cfg, Rng& rng) {
  const Shape shape = random_shape(shape_for_class(raw_class, cfg.num_known), cfg.image_size, rng);
  std::normal_distribution<double> hue_jitter(0.0, 6.0);
  const Rgb color = hsv_to_rgb(hue_for_class(raw_class, cfg) + hue_jitter(rng), uniform_real(rng, 0.55, 0.9),
                               uniform_real(rng, 0.5, 0.9));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!shape.contains(x + 0.5, y + 0.5)) continue;
      img.set_pixel(x, y, color);
      label(x, y) = label_value;
    }
  }
}

void add_texture_noise(RgbImage& img, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 4.0);
  for (auto& b : img.bytes()) b = to_byte(b + noise(rng));
}

LabeledImage make_image(const BenchConfig& cfg, bool target, std::uint64_t seed) {
  Rng rng(seed);
  const int size = cfg.image_size;
  RgbImage img(size, size);
  LabelMap label(size, size, 0);
  paint_background(img, rng);

  const int num_fg_known = cfg.num_known - 1;
  const int known_objects = target ? uniform_int(rng, 1, 3) : uniform_int(rng, 2, 4);
  for (int i = 0; i < known_objects && num_fg_known > 0; ++i) {
    const int cls = uniform_int(rng, 1, num_fg_known);
    paint_object(img, label, cls, static_cast<std::uint8_t>(cls), cfg, rng);
  }
  if (target) {
    // Private objects go on top so every target image shows at least one.
    const int private_objects = uniform_int(rng, 1, 2);
    for (int i = 0; i < private_objects; ++i) {
      const int raw = cfg.num_known + uniform_int(rng, 0, cfg.num_private - 1);
      paint_object(img, label, raw, static_cast<std::uint8_t>(cfg.num_known), cfg, rng);
    }
  }
  add_texture_noise(img, rng);
  if (target) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) img.set_pixel(x, y, cfg.shift.apply(img.pixel(x, y), rng));
    }
  }
  return LabeledImage(std::move(img), std::move(label));
}

Dataset make_split(const BenchConfig& cfg, DomainTag domain, int count, Stream stream, const char* prefix) {
  Dataset ds;
  ds.domain = domain;
  ds.class_space = cfg.class_space();
  ds.items.resize(static_cast<std::size_t>(count));
  ds.names.resize(static_cast<std::size_t>(count));
  const bool target = domain != DomainTag::source;
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    LabeledImage img = make_image(cfg, target, derive_seed(cfg.seed, stream, i));
    if (domain == DomainTag::target) img.label = LabelMap(img.width(), img.height(), kIgnoreIndex);
    char name[32];
    std::snprintf(name, sizeof name, "%s%04zu", prefix, i);
    ds.names[i] = name;
    ds.items[i] = std::move(img);
  });
  return ds;
}

}  // namespace

Rgb DomainShift::apply(Rgb c, Rng& rng) const {
  Rgb out;
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (int ch = 0; ch < 3; ++ch) {
    double v = gain[ch] * c[ch] + bias[ch];
    if (noise_std > 0.0) v += noise(rng);
    out[ch] = to_byte(v);
  }
  return out;
}

void BenchConfig::validate() const {
  if (num_known < 2) throw ValidationError("bench: num_known must be >= 2 (background plus one object class)");
  if (num_private < 1) throw ValidationError("bench: num_private must be >= 1 for an open-set target");
  if (num_known + 1 >= kIgnoreIndex) throw ValidationError("bench: too many classes");
  if (image_size < 16) throw ValidationError("bench: image_size must be >= 16");
  if (train_count < 0 || val_count < 0) throw ValidationError("bench: split sizes must be >= 0");
  if (!(shift.noise_std >= 0.0)) throw ValidationError("bench: noise std must be >= 0");
  if (!(hue_overlap >= 0.0 && hue_overlap <= 1.0)) throw ValidationError("bench: hue_overlap must be in [0,1]");
}

ClassSpace BenchConfig::class_space() const {
  ClassSpace cs;
  cs.num_known = num_known;
  cs.num_private = num_private;
  return cs;
}

ShapeKind shape_for_class(int raw_class, int num_known) {
  static constexpr ShapeKind known[] = {ShapeKind::rectangle, ShapeKind::circle, ShapeKind::triangle};
  static constexpr ShapeKind priv[] = {ShapeKind::cross, ShapeKind::ring};
  if (raw_class < 1) throw ValidationError("background has no shape");
  if (raw_class < num_known) return known[(raw_class - 1) % 3];
  return priv[(raw_class - num_known) % 2];
}

double hue_for_class(int raw_class, const BenchConfig& cfg) {
  const int fg_known = cfg.num_known - 1;
  const double gap = 360.0 / fg_known;
  constexpr double offset = 15.0;
  if (raw_class < cfg.num_known) return offset + gap * (raw_class - 1);
  const int p = raw_class - cfg.num_known;
  const int slots = (cfg.num_private + fg_known - 1) / fg_known;
  const int anchor = p % fg_known;
  const double frac = double(p / fg_known + 1) / (slots + 1);
  return offset + gap * anchor + gap * frac * (1.0 - cfg.hue_overlap);
}

Benchmark generate_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  Benchmark b{make_split(cfg, DomainTag::source, cfg.train_count, kSourceStream, "s"),
              make_split(cfg, DomainTag::target, cfg.train_count, kTargetTrainStream, "t"),
              make_split(cfg, DomainTag::target_val, cfg.val_count, kTargetValStream, "v")};
  const auto head = select_head_classes(class_pixel_frequencies(b.source), b.source.class_space, 2);
  for (Dataset* ds : {&b.source, &b.target_train, &b.target_val}) ds->class_space.head_classes = head;
  return b;
}

std::vector<std::uint64_t> class_pixel_frequencies(const Dataset& ds) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(ds.class_space.num_outputs()), 0);
  for (const auto& item : ds.items) {
    for (auto v : item.label.values()) {
      if (v != kIgnoreIndex && v < counts.size()) ++counts[v];
    }
  }
  return counts;
}

std::vector<int> select_head_classes(const std::vector<std::uint64_t>& freqs, const ClassSpace& cs, int count) {
  std::vector<int> order(static_cast<std::size_t>(cs.num_known));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto fa = a < int(freqs.size()) ? freqs[a] : 0;
    const auto fb = b < int(freqs.size()) ? freqs[b] : 0;
    return fa > fb;
  });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(count, 0))));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace sats
