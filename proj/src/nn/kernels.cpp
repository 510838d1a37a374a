#include "kernels.hpp"

#include <algorithm>

#include "flowcorr/nn/loss.hpp"

namespace flowcorr::nn::detail {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstColMap = Eigen::Map<const Eigen::MatrixXd>;
using ColMap = Eigen::Map<Eigen::MatrixXd>;

// Upper bound on im2col buffer entries per chunk (~32 MiB of doubles).
constexpr std::size_t kMaxPatchEntries = std::size_t{1} << 22;

struct ConvGeometry {
  std::size_t channels, height, width;  // input
  std::size_t kh, kw, sh, sw;
  std::size_t kernels, out_h, out_w;

  std::size_t patch_rows() const { return channels * kh * kw; }
  std::size_t out_hw() const { return out_h * out_w; }
};

ConvGeometry geometry(const Layer& layer) {
  const auto& s = layer.spec;
  return {layer.input_shape.channels, layer.input_shape.height, layer.input_shape.width,
          s.kernel.height, s.kernel.width, s.stride.height, s.stride.width,
          s.kernel_count, layer.output_shape.height, layer.output_shape.width};
}

std::size_t chunk_size(const ConvGeometry& g, std::size_t batch) {
  const std::size_t per_sample = std::max<std::size_t>(1, g.patch_rows() * g.out_hw());
  return std::clamp<std::size_t>(kMaxPatchEntries / per_sample, 1, std::max<std::size_t>(batch, 1));
}

void im2col(const ConvGeometry& g, const Batch& in, std::size_t b0, std::size_t nb,
            Eigen::MatrixXd& patches) {
  const std::size_t kd = g.patch_rows();
  patches.resize(static_cast<Eigen::Index>(kd), static_cast<Eigen::Index>(nb * g.out_hw()));
  double* p = patches.data();
  for (std::size_t b = b0; b < b0 + nb; ++b) {
    const double* x = in.col(static_cast<Eigen::Index>(b)).data();
    for (std::size_t oh = 0; oh < g.out_h; ++oh)
      for (std::size_t ow = 0; ow < g.out_w; ++ow)
        for (std::size_t c = 0; c < g.channels; ++c)
          for (std::size_t i = 0; i < g.kh; ++i) {
            const double* row = x + (c * g.height + oh * g.sh + i) * g.width + ow * g.sw;
            for (std::size_t j = 0; j < g.kw; ++j) *p++ = row[j];
          }
  }
}

void col2im_add(const ConvGeometry& g, const Eigen::MatrixXd& d_patches, std::size_t b0,
                std::size_t nb, Batch& d_in) {
  const double* p = d_patches.data();
  for (std::size_t b = b0; b < b0 + nb; ++b) {
    double* x = d_in.col(static_cast<Eigen::Index>(b)).data();
    for (std::size_t oh = 0; oh < g.out_h; ++oh)
      for (std::size_t ow = 0; ow < g.out_w; ++ow)
        for (std::size_t c = 0; c < g.channels; ++c)
          for (std::size_t i = 0; i < g.kh; ++i) {
            double* row = x + (c * g.height + oh * g.sh + i) * g.width + ow * g.sw;
            for (std::size_t j = 0; j < g.kw; ++j) row[j] += *p++;
          }
  }
}

void conv_forward(const Layer& layer, const Batch& in, Batch& out) {
  const auto g = geometry(layer);
  const auto kd = static_cast<Eigen::Index>(g.patch_rows());
  const auto k = static_cast<Eigen::Index>(g.kernels);
  const auto ohw = static_cast<Eigen::Index>(g.out_hw());
  // Row-major [kernel][patch] weights viewed as a column-major patch x kernel matrix.
  ConstColMap wt(layer.weights.data(), kd, k);
  const std::size_t batch = static_cast<std::size_t>(in.cols());
  out.resize(k * ohw, in.cols());

  Eigen::MatrixXd patches;
  Eigen::MatrixXd rt;
  const std::size_t step = chunk_size(g, batch);
  for (std::size_t b0 = 0; b0 < batch; b0 += step) {
    const std::size_t nb = std::min(step, batch - b0);
    im2col(g, in, b0, nb, patches);
    rt.noalias() = patches.transpose() * wt;  // (nb*ohw) x k
    for (std::size_t b = 0; b < nb; ++b)
      for (Eigen::Index kk = 0; kk < k; ++kk)
        out.col(static_cast<Eigen::Index>(b0 + b)).segment(kk * ohw, ohw) =
            rt.col(kk).segment(static_cast<Eigen::Index>(b) * ohw, ohw).array() +
            layer.bias[static_cast<std::size_t>(kk)];
  }
}

void conv_backward(const Layer& layer, const Batch& in, const Batch& d_out,
                   std::span<double> d_weights, std::span<double> d_bias, Batch* d_in) {
  const auto g = geometry(layer);
  const auto kd = static_cast<Eigen::Index>(g.patch_rows());
  const auto k = static_cast<Eigen::Index>(g.kernels);
  const auto ohw = static_cast<Eigen::Index>(g.out_hw());
  ConstColMap wt(layer.weights.data(), kd, k);
  ColMap dwt(d_weights.data(), kd, k);
  const std::size_t batch = static_cast<std::size_t>(in.cols());
  if (d_in) d_in->setZero(in.rows(), in.cols());

  Eigen::MatrixXd patches;
  Eigen::MatrixXd d_rt;
  Eigen::MatrixXd d_patches;
  const std::size_t step = chunk_size(g, batch);
  for (std::size_t b0 = 0; b0 < batch; b0 += step) {
    const std::size_t nb = std::min(step, batch - b0);
    d_rt.resize(static_cast<Eigen::Index>(nb) * ohw, k);
    for (std::size_t b = 0; b < nb; ++b)
      for (Eigen::Index kk = 0; kk < k; ++kk)
        d_rt.col(kk).segment(static_cast<Eigen::Index>(b) * ohw, ohw) =
            d_out.col(static_cast<Eigen::Index>(b0 + b)).segment(kk * ohw, ohw);
    im2col(g, in, b0, nb, patches);
    dwt.noalias() += patches * d_rt;
    for (Eigen::Index kk = 0; kk < k; ++kk)
      d_bias[static_cast<std::size_t>(kk)] += d_rt.col(kk).sum();
    if (d_in) {
      d_patches.noalias() = wt * d_rt.transpose();
      col2im_add(g, d_patches, b0, nb, *d_in);
    }
  }
}

void pool_forward(const Layer& layer, const Batch& in, Batch& out,
                  std::vector<std::uint32_t>* argmax) {
  const auto& is = layer.input_shape;
  const auto& os = layer.output_shape;
  const auto& s = layer.spec;
  const std::size_t osize = os.size();
  out.resize(static_cast<Eigen::Index>(osize), in.cols());
  if (argmax) argmax->resize(osize * static_cast<std::size_t>(in.cols()));
  for (Eigen::Index b = 0; b < in.cols(); ++b) {
    const double* x = in.col(b).data();
    double* y = out.col(b).data();
    std::uint32_t* am = argmax ? argmax->data() + static_cast<std::size_t>(b) * osize : nullptr;
    std::size_t o = 0;
    for (std::size_t c = 0; c < os.channels; ++c)
      for (std::size_t oh = 0; oh < os.height; ++oh)
        for (std::size_t ow = 0; ow < os.width; ++ow, ++o) {
          std::size_t best = (c * is.height + oh * s.stride.height) * is.width +
                             ow * s.stride.width;
          for (std::size_t i = 0; i < s.pool.height; ++i) {
            const std::size_t base =
                (c * is.height + oh * s.stride.height + i) * is.width + ow * s.stride.width;
            for (std::size_t j = 0; j < s.pool.width; ++j)
              if (x[base + j] > x[best]) best = base + j;
          }
          y[o] = x[best];
          if (am) am[o] = static_cast<std::uint32_t>(best);
        }
  }
}

}  // namespace

void forward_layer(const Layer& layer, const Batch& in, Batch& out,
                   std::vector<std::uint32_t>* argmax) {
  switch (layer.spec.kind) {
    case LayerKind::conv2d:
      conv_forward(layer, in, out);
      return;
    case LayerKind::maxpool:
      pool_forward(layer, in, out, argmax);
      return;
    case LayerKind::dense: {
      Eigen::Map<const RowMajor> w(layer.weights.data(), static_cast<Eigen::Index>(layer.spec.units),
                                   in.rows());
      Eigen::Map<const Eigen::VectorXd> bias(layer.bias.data(),
                                             static_cast<Eigen::Index>(layer.bias.size()));
      out.noalias() = w * in;
      out.colwise() += bias;
      return;
    }
    case LayerKind::relu:
      out = in.cwiseMax(0.0);
      return;
    case LayerKind::sigmoid:
      out = in.unaryExpr([](double z) { return sigmoid(z); });
      return;
    case LayerKind::flatten:
      out = in;
      return;
  }
}

void backward_layer(const Layer& layer, const Batch& in, const Batch& out,
                    const std::vector<std::uint32_t>& argmax, const Batch& d_out,
                    std::span<double> d_weights, std::span<double> d_bias, Batch* d_in) {
  switch (layer.spec.kind) {
    case LayerKind::conv2d:
      conv_backward(layer, in, d_out, d_weights, d_bias, d_in);
      return;
    case LayerKind::maxpool: {
      if (!d_in) return;
      d_in->setZero(in.rows(), in.cols());
      const auto osize = static_cast<std::size_t>(d_out.rows());
      for (Eigen::Index b = 0; b < d_out.cols(); ++b) {
        const std::uint32_t* am = argmax.data() + static_cast<std::size_t>(b) * osize;
        const double* g = d_out.col(b).data();
        double* dx = d_in->col(b).data();
        for (std::size_t o = 0; o < osize; ++o) dx[am[o]] += g[o];
      }
      return;
    }
    case LayerKind::dense: {
      const auto units = static_cast<Eigen::Index>(layer.spec.units);
      Eigen::Map<const RowMajor> w(layer.weights.data(), units, in.rows());
      Eigen::Map<RowMajor> dw(d_weights.data(), units, in.rows());
      Eigen::Map<Eigen::VectorXd> db(d_bias.data(), units);
      dw.noalias() += d_out * in.transpose();
      db += d_out.rowwise().sum();
      if (d_in) d_in->noalias() = w.transpose() * d_out;
      return;
    }
    case LayerKind::relu:
      if (d_in) *d_in = (out.array() > 0.0).select(d_out, 0.0);
      return;
    case LayerKind::sigmoid:
      if (d_in) *d_in = d_out.array() * out.array() * (1.0 - out.array());
      return;
    case LayerKind::flatten:
      if (d_in) *d_in = d_out;
      return;
  }
}

}  // namespace flowcorr::nn::detail
