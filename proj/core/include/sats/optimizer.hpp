#pragma once

#include <cstdint>
#include <vector>

#include "sats/network.hpp"

namespace sats {

/// AdamW with decoupled weight decay and separate backbone/head learning rates.
struct AdamWConfig {
  double lr_backbone = 1e-4;
  double lr_head = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

struct OptimState {
  AdamWConfig config;
  std::vector<std::vector<double>> first_moment;   // one per tensor
  std::vector<std::vector<double>> second_moment;  // one per tensor
  std::int64_t step = 0;

  static OptimState for_params(const NetworkParams& params, const AdamWConfig& config);
};

/// One AdamW update; `lr_scale` multiplies both learning rates (warmup).
/// Throws NumericError on non-finite gradients.
void optimizer_step(NetworkParams& params, const NetworkParams& grads, OptimState& state, double lr_scale = 1.0);

}  // namespace sats
