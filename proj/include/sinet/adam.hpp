#pragma once

// Adam with bias correction.  State is stored per parameter in registration
// order; a parameter with no gradient buffer is treated as having a zero
// gradient, so a fresh optimizer applied to grad-free parameters is a no-op.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sinet/tensor.hpp"

namespace sinet {

// Named trainable tensor.  Order inside a ParamSet is the canonical order for
// optimizer state, checkpoint blobs and parameter counting.
struct Param {
  std::string name;
  Tensor value;
};

using ParamSet = std::vector<Param>;

inline void zero_grads(ParamSet& params) {
  for (Param& p : params) p.value.zero_grad();
}

inline std::int64_t total_size(const ParamSet& params) {
  std::int64_t n = 0;
  for (const Param& p : params) n += p.value.size();
  return n;
}

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;  // first-moment estimates
  std::vector<std::vector<double>> v;  // second-moment estimates

  static AdamState create(const ParamSet& params, double learning_rate = 1e-3) {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw UsageError("AdamState: learning rate must be positive and finite");
    AdamState s;
    s.learning_rate = learning_rate;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Param& p : params) {
      const std::size_t n = p.value.data().size();
      s.m.emplace_back(n, 0.0);
      s.v.emplace_back(n, 0.0);
    }
    return s;
  }
};

// One optimizer update over every parameter, in order.
inline void adam_step(ParamSet& params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) +
                         " parameters, param set has " + std::to_string(params.size()));
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    std::vector<double>& value = p.value.data();
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    if (m.size() != value.size())
      throw DimensionError("adam_step: state for parameter '" + p.name + "' has " +
                           std::to_string(m.size()) + " entries, parameter has " +
                           std::to_string(value.size()));
    const std::vector<double>* grad = p.value.has_grad() ? &p.value.grad() : nullptr;
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad ? (*grad)[j] : 0.0;
      if (!std::isfinite(g))
        throw NumericError("adam_step: non-finite gradient in parameter '" + p.name +
                           "' at index " + std::to_string(j));
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      value[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace sinet
