#pragma once

#include <algorithm>
#include <cmath>

namespace flowcorr::nn {

inline constexpr double kLossEpsilon = 1e-7;

/// -[y ln p + (1-y) ln(1-p)] with p clamped to [eps, 1-eps].
inline double cross_entropy_loss(double p, int y) {
  const double q = std::clamp(p, kLossEpsilon, 1.0 - kLossEpsilon);
  return y != 0 ? -std::log(q) : -std::log1p(-q);
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace flowcorr::nn
