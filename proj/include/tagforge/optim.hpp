#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tagforge/error.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

struct AdamSpec {
  double lr = 0.01;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <std::floating_point T>
struct AdamState {
  std::vector<Matrix<T>> m;
  std::vector<Matrix<T>> v;
  std::uint64_t t = 0;
};

/// One Adam step with L2 weight decay folded into the gradient
/// (g += wd * theta), then bias-corrected moments. Gradients are zeroed
/// afterwards. Moment buffers are allocated on the first call.
template <std::floating_point T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, const AdamSpec& spec) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: parameter count changed between steps");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (params[k]->grad.empty() || !params[k]->grad.same_shape(params[k]->value) ||
        !state.m[k].same_shape(params[k]->value))
      throw ShapeError("adam_step: gradient not populated for parameter " + std::to_string(k));

  ++state.t;
  const double bc1 = 1.0 - std::pow(spec.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(spec.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k]->value.values();
    auto grad = params[k]->grad.values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = static_cast<double>(grad[i]) + spec.weight_decay * static_cast<double>(theta[i]);
      const double mi = spec.beta1 * static_cast<double>(m[i]) + (1.0 - spec.beta1) * g;
      const double vi = spec.beta2 * static_cast<double>(v[i]) + (1.0 - spec.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      theta[i] = static_cast<T>(static_cast<double>(theta[i]) - spec.lr * m_hat / (std::sqrt(v_hat) + spec.eps));
      grad[i] = T{0};
    }
  }
}

}  // namespace tagforge
