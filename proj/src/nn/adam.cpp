#include "flowcorr/nn/adam.hpp"

#include <cmath>

namespace flowcorr::nn {

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size())
    throw ShapeError("adam: " + std::to_string(params.size()) + " parameter blocks but " +
                     std::to_string(grads.size()) + " gradient blocks");
  if (state.m.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw ShapeError("adam: state has " + std::to_string(state.m.size()) + " blocks, got " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].size() != grads[i].size() || state.m[i].size() != params[i].size())
      throw ShapeError("adam: block " + std::to_string(i) + " size mismatch");

  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto p = params[i];
    const auto g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void adam_step(AdamState& state, Network& net, const Gradients& grads) {
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> g;
  auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || grads.bias.size() != layers.size())
    throw ShapeError("adam: gradients do not match network");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].spec.has_params()) continue;
    params.emplace_back(layers[i].weights);
    g.emplace_back(grads.weights[i]);
    params.emplace_back(layers[i].bias);
    g.emplace_back(grads.bias[i]);
  }
  adam_step(state, params, g);
}

}  // namespace flowcorr::nn
