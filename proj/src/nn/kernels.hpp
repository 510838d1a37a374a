#pragma once

// Batched layer kernels shared by the network engine and the single-sample
// entry points. Batches hold one sample per column.

#include <cstdint>
#include <span>
#include <vector>

#include "flowcorr/nn/network.hpp"

namespace flowcorr::nn::detail {

void forward_layer(const Layer& layer, const Batch& in, Batch& out,
                   std::vector<std::uint32_t>* argmax);

/// d_in may be null when the input gradient is not needed. `out` is the
/// layer's forward output (needed by relu).
void backward_layer(const Layer& layer, const Batch& in, const Batch& out,
                    const std::vector<std::uint32_t>& argmax, const Batch& d_out,
                    std::span<double> d_weights, std::span<double> d_bias, Batch* d_in);

}  // namespace flowcorr::nn::detail
