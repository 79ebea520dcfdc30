#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sats/raster.hpp"

namespace sats {

/// Channel widths of the fully-convolutional segmenter:
/// conv3x3(3→hidden1) → conv3x3(hidden1→hidden2) → conv3x3(hidden2→features) → conv1x1(features→C),
/// each 3×3 conv followed by ELU.
struct NetworkShape {
  int hidden1 = 16;
  int hidden2 = 16;
  int features = 16;

  bool operator==(const NetworkShape&) const = default;
};

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
  bool head = false;  // classifier-head parameter (trained with the head learning rate)

  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Parameters of one segmentation network (student or teacher).
class NetworkParams {
 public:
  enum Index : std::size_t {
    kConv1Weight, kConv1Bias, kConv2Weight, kConv2Bias,
    kConv3Weight, kConv3Bias, kHeadWeight, kHeadBias, kTensorCount
  };

  NetworkParams() = default;

  /// He-normal conv weights, 1/sqrt(features) head weights, zero biases; head has K outputs.
  static NetworkParams initialize(const NetworkShape& shape, int num_known, std::uint64_t seed);
  /// Same layout, all values zero.
  static NetworkParams zeros_like(const NetworkParams& like);
  /// Assembles parameters from explicit tensors (checkpoint loading).
  static NetworkParams from_tensors(const NetworkShape& shape, int num_known, std::vector<Tensor> tensors);

  const NetworkShape& shape() const { return shape_; }
  int num_known() const { return num_known_; }
  int num_classes() const { return num_classes_; }
  bool expanded() const { return num_classes_ == num_known_ + 1; }

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  Tensor& tensor(Index i) { return tensors_[i]; }
  const Tensor& tensor(Index i) const { return tensors_[i]; }

  std::size_t parameter_count() const;
  /// Flat view across all tensors, in tensor order.
  double& flat(std::size_t i);
  double flat(std::size_t i) const;

  bool all_finite() const;
  bool same_layout(const NetworkParams& other) const;
  /// this += scale * other
  void add_scaled(const NetworkParams& other, double scale);
  void scale(double factor);

  bool operator==(const NetworkParams&) const = default;

 private:
  NetworkShape shape_;
  int num_known_ = 0;
  int num_classes_ = 0;
  std::vector<Tensor> tensors_;
};

/// Pre-softmax class scores, channel-major (C×H×W).
struct Logits {
  int channels = 0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int c, int x, int y) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

Logits forward_logits(const NetworkParams& params, const RgbImage& image);

/// Softmax over forward_logits. Throws NumericError naming the layer that
/// produced a non-finite value.
ProbMap forward(const NetworkParams& params, const RgbImage& image);

struct LossAndGrad {
  double loss = 0.0;
  NetworkParams grads;
  std::size_t counted_pixels = 0;
};

/// Pixel-mean cross-entropy over non-ignore pixels, with gradients for every
/// parameter. An all-ignore label yields zero loss and zero gradients.
LossAndGrad supervised_loss_and_grad(const NetworkParams& params, const RgbImage& image, const LabelMap& label);

/// supervised_loss_and_grad scaled by the confidence weight q_t ∈ [0,1].
LossAndGrad weighted_target_loss_and_grad(const NetworkParams& params, const RgbImage& image,
                                          const LabelMap& pseudo_label, double q_t);

/// Grows the classifier head from K to K+1 outputs. The first K rows are kept
/// bit-exactly; the new unknown row is drawn like a fresh head row
/// (N(0, 1/features) weights from `seed`, zero bias).
NetworkParams expand_head(const NetworkParams& params, std::uint64_t seed = 0);

/// teacher' = alpha * teacher + (1 - alpha) * student, per parameter.
NetworkParams ema_update(const NetworkParams& teacher, const NetworkParams& student, double alpha);

}  // namespace sats
