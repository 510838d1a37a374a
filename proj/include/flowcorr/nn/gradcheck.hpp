#pragma once

#include <cstddef>

#include "flowcorr/nn/network.hpp"

namespace flowcorr::nn {

struct GradCheckResult {
  double max_error = 0.0;  // worst relative (or absolute, see below) error
  std::size_t layer = 0;   // location of the worst parameter
  std::size_t index = 0;
  bool in_bias = false;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares network_backward against central differences
/// (L(θ+h) - L(θ-h)) / 2h of the per-sample loss, for every parameter.
/// Error is |a - n| / max(|a|, |n|, 1e-8); parameters whose analytic
/// gradient is exactly 0 are measured absolutely, |n|.
GradCheckResult gradient_check(const Network& net, const Tensor& input, int label,
                               double step = 1e-5);

}  // namespace flowcorr::nn
