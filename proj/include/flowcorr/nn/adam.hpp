#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowcorr/nn/network.hpp"

namespace flowcorr::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates per parameter block. Blocks are sized on the first step.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update over matching parameter/gradient blocks.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);

/// Updates every weight and bias block of `net` from `grads`.
void adam_step(AdamState& state, Network& net, const Gradients& grads);

}  // namespace flowcorr::nn
