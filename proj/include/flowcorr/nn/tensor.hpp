#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowcorr/error.hpp"

namespace flowcorr::nn {

/// Parameter storage. Over-aligned so vectorized kernels take the same
/// code path, and so sum in the same order, wherever the block lands.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// (channels, height, width). Flat vectors use {1, 1, n}.
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  static Shape flat(std::size_t n) { return {1, 1, n}; }
  std::size_t size() const { return channels * height * width; }
  bool is_flat() const { return channels == 1 && height == 1; }
  std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }
  bool operator==(const Shape&) const = default;
};

struct Window {
  std::size_t height = 1;
  std::size_t width = 1;

  bool operator==(const Window&) const = default;
};

/// Dense row-major tensor, index (c, h, w) -> (c * H + h) * W + w.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}
  Tensor(Shape s, std::vector<double> values) : shape(s), data(std::move(values)) {
    if (data.size() != shape.size())
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape.str());
  }

  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return data[(c * shape.height + h) * shape.width + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data[(c * shape.height + h) * shape.width + w];
  }
};

}  // namespace flowcorr::nn
