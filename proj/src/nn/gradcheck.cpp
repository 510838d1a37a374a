#include "flowcorr/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "flowcorr/nn/loss.hpp"

namespace flowcorr::nn {

GradCheckResult gradient_check(const Network& net, const Tensor& input, int label, double step) {
  const auto analytic = network_backward(net, input, label);
  Network probe = net;
  auto loss = [&] { return cross_entropy_loss(network_forward(probe, input), label); };

  GradCheckResult result;
  auto visit = [&](std::size_t layer, bool in_bias, ParamVector& values,
                   const ParamVector& grads) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + step;
      const double up = loss();
      values[k] = saved - step;
      const double down = loss();
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grads[k];
      const double err = a == 0.0 ? std::abs(numeric)
                                  : std::abs(a - numeric) /
                                        std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.checked;
      if (err > result.max_error || result.checked == 1) {
        result.max_error = err;
        result.layer = layer;
        result.index = k;
        result.in_bias = in_bias;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  };
  for (std::size_t i = 0; i < probe.layers().size(); ++i) {
    auto& layer = probe.layers()[i];
    visit(i, false, layer.weights, analytic.weights[i]);
    visit(i, true, layer.bias, analytic.bias[i]);
  }
  return result;
}

}  // namespace flowcorr::nn
