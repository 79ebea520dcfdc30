#include "sats/optimizer.hpp"

#include <cmath>

#include "sats/error.hpp"

namespace sats {

void AdamWConfig::validate() const {
  if (!(lr_backbone >= 0.0) || !(lr_head >= 0.0)) throw ValidationError("adamw: learning rates must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("adamw: betas must be in [0,1)");
  }
  if (!(eps > 0.0)) throw ValidationError("adamw: eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ValidationError("adamw: weight decay must be >= 0");
}

OptimState OptimState::for_params(const NetworkParams& params, const AdamWConfig& config) {
  config.validate();
  OptimState s;
  s.config = config;
  for (const auto& t : params.tensors()) {
    s.first_moment.emplace_back(t.size(), 0.0);
    s.second_moment.emplace_back(t.size(), 0.0);
  }
  return s;
}

void optimizer_step(NetworkParams& params, const NetworkParams& grads, OptimState& state, double lr_scale) {
  if (!params.same_layout(grads)) throw ValidationError("optimizer_step: gradient layout mismatch");
  if (state.first_moment.size() != params.tensors().size()) {
    throw ValidationError("optimizer_step: optimizer state does not match parameters");
  }
  if (!grads.all_finite()) throw NumericError("optimizer_step: non-finite gradient");

  const auto& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    auto& tensor = params.tensors()[i];
    const auto& g = grads.tensors()[i].values;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != tensor.size()) throw ValidationError("optimizer_step: moment shape mismatch");
    const double lr = lr_scale * (tensor.head ? c.lr_head : c.lr_backbone);
    for (std::size_t j = 0; j < tensor.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      double& p = tensor.values[j];
      p -= lr * c.weight_decay * p;
      p -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + c.eps);
    }
  }
}

}  // namespace sats
