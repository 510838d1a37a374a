#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowcorr/flowdata.hpp"
#include "flowcorr/nn/layer.hpp"

namespace flowcorr::nn {

/// Activations for a batch: one column per sample, rows in (c, h, w) order.
using Batch = Eigen::MatrixXd;

/// What a checkpoint needs to score raw flows the same way training did.
struct NetworkInfo {
  std::string preset;
  std::size_t flow_len = 0;
  ScalingConfig scaling;
  PairLayout layout;

  bool operator==(const NetworkInfo&) const = default;
};

/// Per-layer parameter gradients, laid out like Layer::weights / bias.
struct Gradients {
  std::vector<ParamVector> weights;
  std::vector<ParamVector> bias;

  void set_zero();
};

/// Feed-forward stack ending in a single sigmoid unit.
class Network {
 public:
  Network() = default;
  /// Validates shape composition and the sigmoid output; parameters start at 0.
  Network(Shape input_shape, std::vector<LayerSpec> specs, NetworkInfo info = {});

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer; biases 0.
  void init_weights(std::uint64_t seed);

  const Shape& input_shape() const { return input_shape_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const NetworkInfo& info() const { return info_; }
  NetworkInfo& info() { return info_; }

  std::vector<LayerSpec> specs() const;
  std::vector<Shape> shapes() const;
  std::size_t parameter_count() const;
  Gradients zero_gradients() const;

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  NetworkInfo info_;
};

/// Cached per-layer state of one forward pass, reused by backward.
struct Workspace {
  std::vector<Batch> activations;  // activations[0] = input
  std::vector<std::vector<std::uint32_t>> argmax;
};

/// Output probabilities for every column of `inputs`. When `ws` is given,
/// intermediate activations are kept for backward_batch.
Eigen::VectorXd forward_batch(const Network& net, const Batch& inputs, Workspace* ws = nullptr);

/// Accumulates into `grads` the gradient of the summed cross-entropy loss of
/// the batch held in `ws`. Returns the summed (clamped) loss.
double backward_batch(const Network& net, const Workspace& ws, std::span<const double> labels,
                      Gradients& grads);

/// p = network(input), 0 < p < 1.
double network_forward(const Network& net, const Tensor& input);

/// Gradient of cross_entropy_loss(network(input), y) w.r.t. every parameter.
Gradients network_backward(const Network& net, const Tensor& input, int label);

}  // namespace flowcorr::nn
