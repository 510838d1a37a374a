#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowcorr/nn/tensor.hpp"

namespace flowcorr::nn {

enum class LayerKind { conv2d, maxpool, dense, relu, sigmoid, flatten };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t kernel_count = 0;  // conv2d
  Window kernel;                 // conv2d
  Window stride;                 // conv2d and maxpool
  Window pool;                   // maxpool
  std::size_t units = 0;         // dense

  static LayerSpec conv2d(std::size_t kernel_count, Window kernel, Window stride = {1, 1});
  static LayerSpec maxpool(Window window, Window stride = {1, 1});
  static LayerSpec dense(std::size_t units);
  static LayerSpec relu() { return of(LayerKind::relu); }
  static LayerSpec sigmoid() { return of(LayerKind::sigmoid); }
  static LayerSpec flatten() { return of(LayerKind::flatten); }
  static LayerSpec of(LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    return s;
  }

  bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
  bool operator==(const LayerSpec&) const = default;
};

/// Output shape of one layer, or ShapeError if the layer cannot consume `in`.
Shape output_shape(const LayerSpec& spec, const Shape& in);

/// Shapes from the input through every layer: result[0] == input.
std::vector<Shape> shape_trace(const Shape& input, std::span<const LayerSpec> specs);

std::size_t weight_count(const LayerSpec& spec, const Shape& in);
std::size_t bias_count(const LayerSpec& spec);

/// A layer bound to its input shape, owning its parameters.
/// conv2d weights: [kernel][channel][kh][kw]; dense weights: [unit][input].
struct Layer {
  LayerSpec spec;
  Shape input_shape;
  Shape output_shape;
  ParamVector weights;
  ParamVector bias;
};

// Single-sample reference entry points. Valid padding only.
Tensor conv2d_forward(const Tensor& input, std::span<const double> kernels,
                      std::span<const double> bias, std::size_t kernel_count, Window kernel,
                      Window stride);
Tensor maxpool_forward(const Tensor& input, Window window, Window stride);
Tensor dense_forward(const Tensor& input, std::span<const double> weights,
                     std::span<const double> bias);

const char* to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& text);

}  // namespace flowcorr::nn
