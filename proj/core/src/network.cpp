#include "sats/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sats/class_space.hpp"
#include "sats/error.hpp"
#include "sats/random.hpp"

namespace sats {
namespace {

constexpr double kInputCenter = 127.5;
constexpr double kInputScale = 1.0 / 64.0;

Tensor make_tensor(std::string name, std::vector<int> shape, bool head) {
  const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                 [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  return Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0), head};
}

std::vector<Tensor> make_layout(const NetworkShape& s, int classes) {
  std::vector<Tensor> t;
  t.push_back(make_tensor("conv1.weight", {s.hidden1, 3, 3, 3}, false));
  t.push_back(make_tensor("conv1.bias", {s.hidden1}, false));
  t.push_back(make_tensor("conv2.weight", {s.hidden2, s.hidden1, 3, 3}, false));
  t.push_back(make_tensor("conv2.bias", {s.hidden2}, false));
  t.push_back(make_tensor("conv3.weight", {s.features, s.hidden2, 3, 3}, false));
  t.push_back(make_tensor("conv3.bias", {s.features}, false));
  t.push_back(make_tensor("head.weight", {classes, s.features}, true));
  t.push_back(make_tensor("head.bias", {classes}, true));
  return t;
}

/// Channel planes with a one-pixel zero border.
struct Padded {
  int channels = 0, width = 0, height = 0;
  std::vector<double> data;

  Padded(int c, int w, int h)
      : channels(c), width(w), height(h), data(static_cast<std::size_t>(c) * (w + 2) * (h + 2), 0.0) {}
  int stride() const { return width + 2; }
  std::size_t plane_size() const { return static_cast<std::size_t>(width + 2) * (height + 2); }
  double* plane(int c) { return data.data() + c * plane_size(); }
  const double* plane(int c) const { return data.data() + c * plane_size(); }
  double& interior(int c, int x, int y) { return plane(c)[(y + 1) * stride() + x + 1]; }
  double interior(int c, int x, int y) const { return plane(c)[(y + 1) * stride() + x + 1]; }
};

void check_finite(const std::vector<double>& v, const char* layer) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite activation in layer ") + layer);
  }
}

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

// out[oc] (H×W, unpadded) = bias + sum_ic w ⋆ in[ic]
void conv3x3_forward(const Padded& in, const Tensor& weight, const Tensor& bias, std::vector<double>& out) {
  const int cout = weight.shape[0], cin = weight.shape[1];
  const int w = in.width, h = in.height, s = in.stride();
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  out.assign(static_cast<std::size_t>(cout) * hw, 0.0);
  for (int oc = 0; oc < cout; ++oc) {
    double* o = out.data() + oc * hw;
    std::fill(o, o + hw, bias.values[oc]);
    for (int ic = 0; ic < cin; ++ic) {
      const double* wk = weight.values.data() + (static_cast<std::size_t>(oc) * cin + ic) * 9;
      const double* ip = in.plane(ic);
      for (int y = 0; y < h; ++y) {
        double* orow = o + static_cast<std::size_t>(y) * w;
        for (int ky = 0; ky < 3; ++ky) {
          const double* irow = ip + (y + ky) * s;
          for (int kx = 0; kx < 3; ++kx) {
            const double wv = wk[ky * 3 + kx];
            const double* src = irow + kx;
            for (int x = 0; x < w; ++x) orow[x] += wv * src[x];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (optionally) the padded input gradient.
void conv3x3_backward(const Padded& in, const Tensor& weight, const std::vector<double>& dz, Tensor& dweight,
                      Tensor& dbias, Padded* din) {
  const int cout = weight.shape[0], cin = weight.shape[1];
  const int w = in.width, h = in.height, s = in.stride();
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  std::vector<double> lane(static_cast<std::size_t>(w));
  for (int oc = 0; oc < cout; ++oc) {
    const double* g = dz.data() + oc * hw;
    double db = 0.0;
    for (std::size_t i = 0; i < hw; ++i) db += g[i];
    dbias.values[oc] += db;
    for (int ic = 0; ic < cin; ++ic) {
      const std::size_t wofs = (static_cast<std::size_t>(oc) * cin + ic) * 9;
      const double* wk = weight.values.data() + wofs;
      double* dwk = dweight.values.data() + wofs;
      const double* ip = in.plane(ic);
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          std::fill(lane.begin(), lane.end(), 0.0);
          for (int y = 0; y < h; ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * w;
            const double* src = ip + (y + ky) * s + kx;
            for (int x = 0; x < w; ++x) lane[x] += grow[x] * src[x];
          }
          dwk[ky * 3 + kx] += std::accumulate(lane.begin(), lane.end(), 0.0);
        }
      }
      if (!din) continue;
      double* dip = din->plane(ic);
      for (int y = 0; y < h; ++y) {
        const double* grow = g + static_cast<std::size_t>(y) * w;
        for (int ky = 0; ky < 3; ++ky) {
          double* drow = dip + (y + ky) * s;
          for (int kx = 0; kx < 3; ++kx) {
            const double wv = wk[ky * 3 + kx];
            double* dst = drow + kx;
            for (int x = 0; x < w; ++x) dst[x] += wv * grow[x];
          }
        }
      }
    }
  }
}

// ELU into the interior of a padded buffer.
void activate_padded(const std::vector<double>& z, Padded& a) {
  const std::size_t hw = static_cast<std::size_t>(a.width) * a.height;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) a.interior(c, x, y) = elu(z[c * hw + y * a.width + x]);
    }
  }
}

// dz = d(activation) ⊙ ELU'(z), reading the padded interior of da.
void elu_backward_padded(const Padded& da, const std::vector<double>& z, std::vector<double>& dz) {
  const std::size_t hw = static_cast<std::size_t>(da.width) * da.height;
  dz.resize(z.size());
  for (int c = 0; c < da.channels; ++c) {
    for (int y = 0; y < da.height; ++y) {
      for (int x = 0; x < da.width; ++x) {
        const std::size_t i = c * hw + y * da.width + x;
        const double d = z[i] > 0.0 ? 1.0 : std::exp(z[i]);
        dz[i] = da.interior(c, x, y) * d;
      }
    }
  }
}

struct ForwardPass {
  int width, height;
  Padded input;
  std::vector<double> z1;
  Padded a1;
  std::vector<double> z2;
  Padded a2;
  std::vector<double> z3;
  std::vector<double> a3;      // unpadded, features × H×W
  std::vector<double> logits;  // classes × H×W

  ForwardPass(const NetworkShape& s, int w, int h)
      : width(w), height(h), input(3, w, h), a1(s.hidden1, w, h), a2(s.hidden2, w, h) {}
};

ForwardPass run_forward(const NetworkParams& p, const RgbImage& image) {
  if (image.width() < 1 || image.height() < 1) throw ValidationError("forward: empty image");
  const int w = image.width(), h = image.height();
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  ForwardPass f(p.shape(), w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) f.input.interior(c, x, y) = (image.at(x, y, c) - kInputCenter) * kInputScale;
    }
  }
  using I = NetworkParams::Index;
  conv3x3_forward(f.input, p.tensor(I::kConv1Weight), p.tensor(I::kConv1Bias), f.z1);
  check_finite(f.z1, "conv1");
  activate_padded(f.z1, f.a1);
  conv3x3_forward(f.a1, p.tensor(I::kConv2Weight), p.tensor(I::kConv2Bias), f.z2);
  check_finite(f.z2, "conv2");
  activate_padded(f.z2, f.a2);
  conv3x3_forward(f.a2, p.tensor(I::kConv3Weight), p.tensor(I::kConv3Bias), f.z3);
  check_finite(f.z3, "conv3");
  f.a3.resize(f.z3.size());
  std::transform(f.z3.begin(), f.z3.end(), f.a3.begin(), elu);

  const Tensor& hw_t = p.tensor(I::kHeadWeight);
  const Tensor& hb_t = p.tensor(I::kHeadBias);
  const int classes = p.num_classes(), feats = p.shape().features;
  f.logits.assign(static_cast<std::size_t>(classes) * hw, 0.0);
  for (int c = 0; c < classes; ++c) {
    double* out = f.logits.data() + c * hw;
    std::fill(out, out + hw, hb_t.values[c]);
    for (int k = 0; k < feats; ++k) {
      const double wv = hw_t.values[static_cast<std::size_t>(c) * feats + k];
      const double* a = f.a3.data() + k * hw;
      for (std::size_t i = 0; i < hw; ++i) out[i] += wv * a[i];
    }
  }
  check_finite(f.logits, "head");
  return f;
}

// Softmax over channel-major logits into a pixel-major ProbMap.
ProbMap softmax(const std::vector<double>& logits, int classes, int w, int h) {
  ProbMap probs(w, h, classes);
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  for (std::size_t i = 0; i < hw; ++i) {
    auto px = probs.pixel(i);
    double mx = logits[i];
    for (int c = 1; c < classes; ++c) mx = std::max(mx, logits[c * hw + i]);
    double total = 0.0;
    for (int c = 0; c < classes; ++c) total += (px[c] = std::exp(logits[c * hw + i] - mx));
    for (int c = 0; c < classes; ++c) px[c] /= total;
  }
  return probs;
}

LossAndGrad loss_and_grad(const NetworkParams& p, const RgbImage& image, const LabelMap& label, double q) {
  if (!label.same_size(image.width(), image.height())) {
    throw ValidationError("loss: label and image dimensions differ");
  }
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("loss: confidence weight must be in [0,1]");
  const int classes = p.num_classes();
  std::size_t counted = 0;
  for (auto v : label.values()) {
    if (v == kIgnoreIndex) continue;
    if (v >= classes) {
      throw ValidationError("loss: label value " + std::to_string(v) + " invalid for a " +
                            std::to_string(classes) + "-class head");
    }
    ++counted;
  }
  LossAndGrad out{0.0, NetworkParams::zeros_like(p), counted};
  if (counted == 0 || q == 0.0) return out;

  const ForwardPass f = run_forward(p, image);
  const int w = f.width, h = f.height;
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  const ProbMap probs = softmax(f.logits, classes, w, h);
  const double scale = q / static_cast<double>(counted);

  // dL/dlogits, channel-major.
  std::vector<double> dlogits(static_cast<std::size_t>(classes) * hw, 0.0);
  double nll = 0.0;
  for (std::size_t i = 0; i < hw; ++i) {
    const int y = label[i];
    if (y == kIgnoreIndex) continue;
    const auto px = probs.pixel(i);
    double mx = f.logits[i];
    for (int c = 1; c < classes; ++c) mx = std::max(mx, f.logits[c * hw + i]);
    double total = 0.0;
    for (int c = 0; c < classes; ++c) total += std::exp(f.logits[c * hw + i] - mx);
    nll += -(f.logits[y * hw + i] - mx - std::log(total));
    for (int c = 0; c < classes; ++c) dlogits[c * hw + i] = scale * (px[c] - (c == y ? 1.0 : 0.0));
  }
  out.loss = q * (nll / static_cast<double>(counted));
  if (!std::isfinite(out.loss)) throw NumericError("loss: non-finite cross-entropy");

  using I = NetworkParams::Index;
  NetworkParams& g = out.grads;
  const int feats = p.shape().features;
  const Tensor& head_w = p.tensor(I::kHeadWeight);
  std::vector<double> da3(static_cast<std::size_t>(feats) * hw, 0.0);
  for (int c = 0; c < classes; ++c) {
    const double* d = dlogits.data() + c * hw;
    g.tensor(I::kHeadBias).values[c] += std::accumulate(d, d + hw, 0.0);
    for (int k = 0; k < feats; ++k) {
      const double* a = f.a3.data() + k * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += d[i] * a[i];
      g.tensor(I::kHeadWeight).values[static_cast<std::size_t>(c) * feats + k] += acc;
      const double wv = head_w.values[static_cast<std::size_t>(c) * feats + k];
      double* dst = da3.data() + k * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] += wv * d[i];
    }
  }

  std::vector<double> dz3(da3.size());
  for (std::size_t i = 0; i < da3.size(); ++i) dz3[i] = da3[i] * (f.z3[i] > 0.0 ? 1.0 : std::exp(f.z3[i]));

  Padded da2(p.shape().hidden2, w, h);
  conv3x3_backward(f.a2, p.tensor(I::kConv3Weight), dz3, g.tensor(I::kConv3Weight), g.tensor(I::kConv3Bias), &da2);
  std::vector<double> dz2;
  elu_backward_padded(da2, f.z2, dz2);

  Padded da1(p.shape().hidden1, w, h);
  conv3x3_backward(f.a1, p.tensor(I::kConv2Weight), dz2, g.tensor(I::kConv2Weight), g.tensor(I::kConv2Bias), &da1);
  std::vector<double> dz1;
  elu_backward_padded(da1, f.z1, dz1);

  conv3x3_backward(f.input, p.tensor(I::kConv1Weight), dz1, g.tensor(I::kConv1Weight), g.tensor(I::kConv1Bias),
                   nullptr);
  if (!g.all_finite()) throw NumericError("loss: non-finite gradient");
  return out;
}

}  // namespace

NetworkParams NetworkParams::initialize(const NetworkShape& shape, int num_known, std::uint64_t seed) {
  if (shape.hidden1 < 1 || shape.hidden2 < 1 || shape.features < 1) {
    throw ValidationError("network: channel widths must be positive");
  }
  if (num_known < 1) throw ValidationError("network: need at least one known class");
  NetworkParams p;
  p.shape_ = shape;
  p.num_known_ = num_known;
  p.num_classes_ = num_known;
  p.tensors_ = make_layout(shape, num_known);

  Rng rng(seed);
  auto fill_normal = [&rng](Tensor& t, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.values) v = dist(rng);
  };
  fill_normal(p.tensors_[kConv1Weight], std::sqrt(2.0 / (3 * 9)));
  fill_normal(p.tensors_[kConv2Weight], std::sqrt(2.0 / (shape.hidden1 * 9)));
  fill_normal(p.tensors_[kConv3Weight], std::sqrt(2.0 / (shape.hidden2 * 9)));
  fill_normal(p.tensors_[kHeadWeight], 1.0 / std::sqrt(double(shape.features)));
  return p;
}

NetworkParams NetworkParams::zeros_like(const NetworkParams& like) {
  NetworkParams p = like;
  for (auto& t : p.tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
  return p;
}

NetworkParams NetworkParams::from_tensors(const NetworkShape& shape, int num_known, std::vector<Tensor> tensors) {
  if (tensors.size() != kTensorCount) throw ValidationError("network: wrong tensor count");
  const int classes = tensors[kHeadBias].shape.empty() ? 0 : tensors[kHeadBias].shape[0];
  if (classes != num_known && classes != num_known + 1) {
    throw ValidationError("network: head must have K or K+1 outputs");
  }
  const auto layout = make_layout(shape, classes);
  for (std::size_t i = 0; i < kTensorCount; ++i) {
    if (tensors[i].name != layout[i].name || tensors[i].shape != layout[i].shape ||
        tensors[i].values.size() != layout[i].values.size()) {
      throw ValidationError("network: tensor '" + tensors[i].name + "' does not match the expected layout");
    }
    tensors[i].head = layout[i].head;
  }
  NetworkParams p;
  p.shape_ = shape;
  p.num_known_ = num_known;
  p.num_classes_ = classes;
  p.tensors_ = std::move(tensors);
  if (!p.all_finite()) throw ValidationError("network: non-finite parameter values");
  return p;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

double& NetworkParams::flat(std::size_t i) {
  for (auto& t : tensors_) {
    if (i < t.size()) return t.values[i];
    i -= t.size();
  }
  throw ValidationError("network: flat index out of range");
}

double NetworkParams::flat(std::size_t i) const { return const_cast<NetworkParams*>(this)->flat(i); }

bool NetworkParams::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

bool NetworkParams::same_layout(const NetworkParams& other) const {
  if (shape_ != other.shape_ || num_classes_ != other.num_classes_ || tensors_.size() != other.tensors_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].shape != other.tensors_[i].shape) return false;
  }
  return true;
}

void NetworkParams::add_scaled(const NetworkParams& other, double factor) {
  if (!same_layout(other)) throw ValidationError("network: layout mismatch");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& a = tensors_[i].values;
    const auto& b = other.tensors_[i].values;
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += factor * b[j];
  }
}

void NetworkParams::scale(double factor) {
  for (auto& t : tensors_) {
    for (auto& v : t.values) v *= factor;
  }
}

Logits forward_logits(const NetworkParams& params, const RgbImage& image) {
  ForwardPass f = run_forward(params, image);
  return Logits{params.num_classes(), f.width, f.height, std::move(f.logits)};
}

ProbMap forward(const NetworkParams& params, const RgbImage& image) {
  const ForwardPass f = run_forward(params, image);
  return softmax(f.logits, params.num_classes(), f.width, f.height);
}

LossAndGrad supervised_loss_and_grad(const NetworkParams& params, const RgbImage& image, const LabelMap& label) {
  return loss_and_grad(params, image, label, 1.0);
}

LossAndGrad weighted_target_loss_and_grad(const NetworkParams& params, const RgbImage& image,
                                          const LabelMap& pseudo_label, double q_t) {
  return loss_and_grad(params, image, pseudo_label, q_t);
}

NetworkParams expand_head(const NetworkParams& params, std::uint64_t seed) {
  if (params.expanded()) throw ValidationError("expand_head: head already has K+1 outputs");
  std::vector<Tensor> tensors = params.tensors();
  const int feats = params.shape().features;
  const int classes = params.num_classes() + 1;
  auto& w = tensors[NetworkParams::kHeadWeight];
  w.shape = {classes, feats};
  w.values.resize(static_cast<std::size_t>(classes) * feats, 0.0);
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(feats)));
  for (auto it = w.values.end() - feats; it != w.values.end(); ++it) *it = dist(rng);
  auto& b = tensors[NetworkParams::kHeadBias];
  b.shape = {classes};
  b.values.resize(static_cast<std::size_t>(classes), 0.0);
  return NetworkParams::from_tensors(params.shape(), params.num_known(), std::move(tensors));
}

NetworkParams ema_update(const NetworkParams& teacher, const NetworkParams& student, double alpha) {
  if (!teacher.same_layout(student)) throw ValidationError("ema_update: teacher and student layouts differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("ema_update: alpha must be in [0,1]");
  NetworkParams out = teacher;
  for (std::size_t i = 0; i < out.tensors().size(); ++i) {
    auto& phi = out.tensors()[i].values;
    const auto& theta = student.tensors()[i].values;
    for (std::size_t j = 0; j < phi.size(); ++j) phi[j] = alpha * phi[j] + (1.0 - alpha) * theta[j];
  }
  return out;
}

}  // namespace sats
