#include "flowcorr/nn/layer.hpp"

#include "kernels.hpp"

namespace flowcorr::nn {

LayerSpec LayerSpec::conv2d(std::size_t kernel_count, Window kernel, Window stride) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.kernel_count = kernel_count;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::maxpool(Window window, Window stride) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.pool = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  return s;
}

namespace {

Shape sliding(const char* what, const Shape& in, std::size_t channels, Window window,
              Window stride) {
  if (window.height == 0 || window.width == 0 || stride.height == 0 || stride.width == 0)
    throw ShapeError(std::string(what) + ": window and stride must be positive");
  if (window.height > in.height || window.width > in.width)
    throw ShapeError(std::string(what) + ": window " + std::to_string(window.height) + "x" +
                     std::to_string(window.width) + " does not fit input " + in.str());
  return {channels, (in.height - window.height) / stride.height + 1,
          (in.width - window.width) / stride.width + 1};
}

}  // namespace

Shape output_shape(const LayerSpec& spec, const Shape& in) {
  switch (spec.kind) {
    case LayerKind::conv2d:
      if (spec.kernel_count == 0) throw ShapeError("conv2d: kernel count must be positive");
      return sliding("conv2d", in, spec.kernel_count, spec.kernel, spec.stride);
    case LayerKind::maxpool:
      return sliding("maxpool", in, in.channels, spec.pool, spec.stride);
    case LayerKind::dense:
      if (spec.units == 0) throw ShapeError("dense: unit count must be positive");
      if (!in.is_flat())
        throw ShapeError("dense: input " + in.str() + " must be flattened first");
      return Shape::flat(spec.units);
    case LayerKind::relu:
    case LayerKind::sigmoid:
      return in;
    case LayerKind::flatten:
      return Shape::flat(in.size());
  }
  throw ShapeError("unknown layer kind");
}

std::vector<Shape> shape_trace(const Shape& input, std::span<const LayerSpec> specs) {
  std::vector<Shape> out{input};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      out.push_back(output_shape(specs[i], out.back()));
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::size_t weight_count(const LayerSpec& spec, const Shape& in) {
  switch (spec.kind) {
    case LayerKind::conv2d:
      return spec.kernel_count * in.channels * spec.kernel.height * spec.kernel.width;
    case LayerKind::dense:
      return spec.units * in.size();
    default:
      return 0;
  }
}

std::size_t bias_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::conv2d: return spec.kernel_count;
    case LayerKind::dense: return spec.units;
    default: return 0;
  }
}

namespace {

Tensor run_single(const Layer& layer, const Tensor& input) {
  Batch in = Eigen::Map<const Eigen::VectorXd>(input.data.data(),
                                               static_cast<Eigen::Index>(input.data.size()));
  Batch out;
  detail::forward_layer(layer, in, out, nullptr);
  return Tensor(layer.output_shape, std::vector<double>(out.data(), out.data() + out.size()));
}

Layer bind_layer(const LayerSpec& spec, const Shape& in, std::span<const double> weights,
           std::span<const double> bias) {
  Layer layer{spec, in, output_shape(spec, in), {}, {}};
  if (weights.size() != weight_count(spec, in))
    throw ShapeError(std::string(to_string(spec.kind)) + ": expected " +
                     std::to_string(weight_count(spec, in)) + " weights, got " +
                     std::to_string(weights.size()));
  if (bias.size() != bias_count(spec))
    throw ShapeError(std::string(to_string(spec.kind)) + ": expected " +
                     std::to_string(bias_count(spec)) + " biases, got " +
                     std::to_string(bias.size()));
  layer.weights.assign(weights.begin(), weights.end());
  layer.bias.assign(bias.begin(), bias.end());
  return layer;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, std::span<const double> kernels,
                      std::span<const double> bias, std::size_t kernel_count, Window kernel,
                      Window stride) {
  return run_single(bind_layer(LayerSpec::conv2d(kernel_count, kernel, stride), input.shape, kernels, bias),
                    input);
}

Tensor maxpool_forward(const Tensor& input, Window window, Window stride) {
  return run_single(bind_layer(LayerSpec::maxpool(window, stride), input.shape, {}, {}), input);
}

Tensor dense_forward(const Tensor& input, std::span<const double> weights,
                     std::span<const double> bias) {
  // A flat input of any stored shape is accepted here.
  const Shape flat = Shape::flat(input.shape.size());
  if (bias.empty() || weights.size() != bias.size() * flat.width)
    throw ShapeError("dense: weight matrix is " + std::to_string(weights.size()) +
                     " values, expected units x " + std::to_string(flat.width));
  Tensor in(flat, input.data);
  return run_single(bind_layer(LayerSpec::dense(bias.size()), flat, weights, bias), in);
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& text) {
  for (auto k : {LayerKind::conv2d, LayerKind::maxpool, LayerKind::dense, LayerKind::relu,
                 LayerKind::sigmoid, LayerKind::flatten})
    if (text == to_string(k)) return k;
  throw ParseError("unknown layer kind '" + text + "'");
}

}  // namespace flowcorr::nn
