#include "flowcorr/nn/network.hpp"

#include <cmath>

#include "flowcorr/nn/loss.hpp"
#include "flowcorr/random.hpp"
#include "kernels.hpp"

namespace flowcorr::nn {

void Gradients::set_zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

Network::Network(Shape input_shape, std::vector<LayerSpec> specs, NetworkInfo info)
    : input_shape_(input_shape), info_(std::move(info)) {
  if (specs.empty()) throw ShapeError("network has no layers");
  const auto shapes = shape_trace(input_shape, specs);
  if (specs.back().kind != LayerKind::sigmoid || shapes.back() != Shape::flat(1))
    throw ShapeError("network must end in a single-unit sigmoid output");
  for (std::size_t i = 0; i + 1 < specs.size(); ++i)
    if (specs[i].kind == LayerKind::sigmoid)
      throw ShapeError("layer " + std::to_string(i) + ": sigmoid is only supported as the output");
  layers_.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Layer layer{specs[i], shapes[i], shapes[i + 1], {}, {}};
    layer.weights.assign(weight_count(specs[i], shapes[i]), 0.0);
    layer.bias.assign(bias_count(specs[i]), 0.0);
    layers_.push_back(std::move(layer));
  }
}

void Network::init_weights(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& layer = layers_[i];
    if (!layer.spec.has_params()) continue;
    double fan_in = 0.0, fan_out = 0.0;
    if (layer.spec.kind == LayerKind::conv2d) {
      const double area = static_cast<double>(layer.spec.kernel.height * layer.spec.kernel.width);
      fan_in = static_cast<double>(layer.input_shape.channels) * area;
      fan_out = static_cast<double>(layer.spec.kernel_count) * area;
    } else {
      fan_in = static_cast<double>(layer.input_shape.size());
      fan_out = static_cast<double>(layer.spec.units);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(derive_seed(seed, 0x1417u, i));
    for (auto& w : layer.weights) w = (2.0 * uniform01(rng) - 1.0) * limit;
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l.spec);
  return out;
}

std::vector<Shape> Network::shapes() const {
  std::vector<Shape> out{input_shape_};
  for (const auto& l : layers_) out.push_back(l.output_shape);
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

Gradients Network::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

namespace {

void check_input(const Network& net, const Batch& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != net.input_shape().size())
    throw ShapeError("layer 0: input has " + std::to_string(inputs.rows()) +
                     " values, network expects " + net.input_shape().str());
}

}  // namespace

Eigen::VectorXd forward_batch(const Network& net, const Batch& inputs, Workspace* ws) {
  check_input(net, inputs);
  const auto& layers = net.layers();
  if (ws) {
    ws->activations.resize(layers.size() + 1);
    ws->argmax.resize(layers.size());
    ws->activations[0] = inputs;
    for (std::size_t i = 0; i < layers.size(); ++i)
      detail::forward_layer(layers[i], ws->activations[i], ws->activations[i + 1],
                            &ws->argmax[i]);
    return ws->activations.back().row(0).transpose();
  }
  Batch a = inputs, b;
  for (const auto& layer : layers) {
    detail::forward_layer(layer, a, b, nullptr);
    std::swap(a, b);
  }
  return a.row(0).transpose();
}

double backward_batch(const Network& net, const Workspace& ws, std::span<const double> labels,
                      Gradients& grads) {
  const auto& layers = net.layers();
  const std::size_t n = layers.size();
  const Batch& probs = ws.activations.back();
  if (ws.activations.size() != n + 1 || static_cast<std::size_t>(probs.cols()) != labels.size())
    throw ShapeError("backward: workspace does not match network or labels");

  // Sigmoid output fused with cross-entropy: dL/dz = p - y.
  double loss = 0.0;
  Batch grad(1, probs.cols());
  for (Eigen::Index b = 0; b < probs.cols(); ++b) {
    const double p = probs(0, b);
    const double y = labels[static_cast<std::size_t>(b)];
    loss += cross_entropy_loss(p, y != 0.0 ? 1 : 0);
    grad(0, b) = p - y;
  }

  Batch next;
  for (std::size_t i = n - 1; i-- > 0;) {
    const bool need_input_grad = i > 0;
    detail::backward_layer(layers[i], ws.activations[i], ws.activations[i + 1], ws.argmax[i], grad,
                           grads.weights[i], grads.bias[i], need_input_grad ? &next : nullptr);
    if (need_input_grad) std::swap(grad, next);
  }
  return loss;
}

double network_forward(const Network& net, const Tensor& input) {
  if (input.shape != net.input_shape())
    throw ShapeError("layer 0: input shape " + input.shape.str() + " does not match network input " +
                     net.input_shape().str());
  Batch in = Eigen::Map<const Eigen::VectorXd>(input.data.data(),
                                               static_cast<Eigen::Index>(input.data.size()));
  return forward_batch(net, in)(0);
}

Gradients network_backward(const Network& net, const Tensor& input, int label) {
  if (input.shape != net.input_shape())
    throw ShapeError("layer 0: input shape " + input.shape.str() + " does not match network input " +
                     net.input_shape().str());
  Batch in = Eigen::Map<const Eigen::VectorXd>(input.data.data(),
                                               static_cast<Eigen::Index>(input.data.size()));
  Workspace ws;
  forward_batch(net, in, &ws);
  auto grads = net.zero_gradients();
  const double y = label != 0 ? 1.0 : 0.0;
  backward_batch(net, ws, std::span<const double>(&y, 1), grads);
  return grads;
}

}  // namespace flowcorr::nn
