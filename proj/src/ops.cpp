#include "ninconv/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "ninconv/error.hpp"
#include "ninconv/parallel.hpp"

namespace ninconv {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  int in_c, out_c, kh, kw, ph, pw, h, w;

  int patch_rows() const { return in_c * kh * kw; }
  int pixels() const { return h * w; }
  // A 1x1 kernel without padding reads the input planes directly.
  bool pointwise() const { return kh == 1 && kw == 1 && ph == 0 && pw == 0; }
};

ConvGeometry check_conv(const Tensor& input, const ConvParams& params) {
  const Shape& in = input.shape();
  const Shape& k = params.kernel.shape();
  if (in.c != k.c) {
    throw Error(fmt::format("conv2d: input has {} channels, kernel expects {}",
                            in.c, k.c));
  }
  if (k.h % 2 == 0 || k.w % 2 == 0) {
    throw Error(fmt::format("conv2d: kernel {}x{} is not odd", k.h, k.w));
  }
  if (params.pad_h != (k.h - 1) / 2 || params.pad_w != (k.w - 1) / 2) {
    throw Error(fmt::format(
        "conv2d: padding ({}, {}) is not same-mode for a {}x{} kernel",
        params.pad_h, params.pad_w, k.h, k.w));
  }
  if (params.bias.size() != static_cast<std::size_t>(k.n)) {
    throw Error(fmt::format("conv2d: bias has {} entries for {} filters",
                            params.bias.size(), k.n));
  }
  return {k.c, k.n, k.h, k.w, params.pad_h, params.pad_w, in.h, in.w};
}

// Unrolls one sample into a (in_c * kh * kw) x (h * w) patch matrix.
void im2col(std::span<const double> sample, const ConvGeometry& g,
            std::vector<double>& cols) {
  cols.assign(static_cast<std::size_t>(g.patch_rows()) * g.pixels(), 0.0);
  std::size_t row = 0;
  for (int c = 0; c < g.in_c; ++c) {
    const double* plane = sample.data() + static_cast<std::size_t>(c) * g.pixels();
    for (int dy = 0; dy < g.kh; ++dy) {
      for (int dx = 0; dx < g.kw; ++dx, ++row) {
        double* dst = cols.data() + row * g.pixels();
        const int x_lo = std::max(0, g.pw - dx);
        const int x_hi = std::min(g.w, g.w + g.pw - dx);
        for (int y = 0; y < g.h; ++y) {
          const int sy = y + dy - g.ph;
          if (sy < 0 || sy >= g.h) continue;
          const double* src = plane + static_cast<std::size_t>(sy) * g.w;
          for (int x = x_lo; x < x_hi; ++x) {
            dst[y * g.w + x] = src[x + dx - g.pw];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch-matrix gradients back onto the planes.
void col2im(const std::vector<double>& cols, const ConvGeometry& g,
            std::span<double> sample) {
  std::fill(sample.begin(), sample.end(), 0.0);
  std::size_t row = 0;
  for (int c = 0; c < g.in_c; ++c) {
    double* plane = sample.data() + static_cast<std::size_t>(c) * g.pixels();
    for (int dy = 0; dy < g.kh; ++dy) {
      for (int dx = 0; dx < g.kw; ++dx, ++row) {
        const double* src = cols.data() + row * g.pixels();
        const int x_lo = std::max(0, g.pw - dx);
        const int x_hi = std::min(g.w, g.w + g.pw - dx);
        for (int y = 0; y < g.h; ++y) {
          const int sy = y + dy - g.ph;
          if (sy < 0 || sy >= g.h) continue;
          double* dst = plane + static_cast<std::size_t>(sy) * g.w;
          for (int x = x_lo; x < x_hi; ++x) {
            dst[x + dx - g.pw] += src[y * g.w + x];
          }
        }
      }
    }
  }
}

void check_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b)) {
    throw Error(fmt::format("{}: shape mismatch {} vs {}", op, a.str(), b.str()));
  }
}

}  // namespace

ConvParams ConvParams::same(int out_channels, int in_channels, int k) {
  if (k < 1 || k % 2 == 0) {
    throw Error(fmt::format("same padding needs an odd kernel size, got {}", k));
  }
  ConvParams p;
  p.kernel = Tensor(Shape{out_channels, in_channels, k, k});
  p.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
  p.pad_h = (k - 1) / 2;
  p.pad_w = (k - 1) / 2;
  return p;
}

Tensor conv2d_forward(const Tensor& input, const ConvParams& params) {
  const ConvGeometry g = check_conv(input, params);
  const int batch = input.shape().n;
  Tensor out(Shape{batch, g.out_c, g.h, g.w});
  const ConstMatrixMap weights(params.kernel.data().data(), g.out_c,
                               g.patch_rows());

  parallel_for(batch, [&](int n) {
    std::vector<double> cols;
    const double* patches = input.sample(n).data();
    if (!g.pointwise()) {
      im2col(input.sample(n), g, cols);
      patches = cols.data();
    }
    const ConstMatrixMap patch_matrix(patches, g.patch_rows(), g.pixels());
    MatrixMap result(out.sample(n).data(), g.out_c, g.pixels());
    result.noalias() = weights * patch_matrix;
    for (int o = 0; o < g.out_c; ++o) {
      result.row(o).array() += params.bias[static_cast<std::size_t>(o)];
    }
  });
  ensure_finite(out, "conv2d_forward");
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params,
                          const Tensor& grad_out) {
  const ConvGeometry g = check_conv(input, params);
  const int batch = input.shape().n;
  check_same_shape(grad_out.shape(), Shape{batch, g.out_c, g.h, g.w},
                   "conv2d_backward");

  ConvGrads grads{Tensor(input.shape()), Tensor(params.kernel.shape()),
                  std::vector<double>(static_cast<std::size_t>(g.out_c), 0.0)};
  const ConstMatrixMap weights(params.kernel.data().data(), g.out_c,
                               g.patch_rows());

  // Per-sample partial sums, reduced below in sample order.
  std::vector<std::vector<double>> kernel_parts(static_cast<std::size_t>(batch));
  std::vector<std::vector<double>> bias_parts(static_cast<std::size_t>(batch));

  parallel_for(batch, [&](int n) {
    const ConstMatrixMap go(grad_out.sample(n).data(), g.out_c, g.pixels());
    std::vector<double> cols;
    const double* patches = input.sample(n).data();
    if (!g.pointwise()) {
      im2col(input.sample(n), g, cols);
      patches = cols.data();
    }
    const ConstMatrixMap patch_matrix(patches, g.patch_rows(), g.pixels());

    auto& kpart = kernel_parts[static_cast<std::size_t>(n)];
    kpart.resize(static_cast<std::size_t>(g.out_c) * g.patch_rows());
    MatrixMap(kpart.data(), g.out_c, g.patch_rows()).noalias() =
        go * patch_matrix.transpose();

    auto& bpart = bias_parts[static_cast<std::size_t>(n)];
    bpart.resize(static_cast<std::size_t>(g.out_c));
    // Plain loop: Eigen's vectorised sum splits on buffer alignment, which
    // varies between allocations and breaks run-to-run reproducibility.
    const double* row = grad_out.sample(n).data();
    for (int o = 0; o < g.out_c; ++o, row += g.pixels()) {
      double acc = 0.0;
      for (int i = 0; i < g.pixels(); ++i) acc += row[i];
      bpart[static_cast<std::size_t>(o)] = acc;
    }

    if (g.pointwise()) {
      MatrixMap(grads.input.sample(n).data(), g.in_c, g.pixels()).noalias() =
          weights.transpose() * go;
    } else {
      std::vector<double> grad_cols(static_cast<std::size_t>(g.patch_rows()) *
                                    g.pixels());
      MatrixMap(grad_cols.data(), g.patch_rows(), g.pixels()).noalias() =
          weights.transpose() * go;
      col2im(grad_cols, g, grads.input.sample(n));
    }
  });

  auto& gk = grads.kernel.storage();
  for (int n = 0; n < batch; ++n) {
    const auto& kpart = kernel_parts[static_cast<std::size_t>(n)];
    const auto& bpart = bias_parts[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += kpart[i];
    for (std::size_t o = 0; o < grads.bias.size(); ++o) grads.bias[o] += bpart[o];
  }
  ensure_finite(grads.input, "conv2d_backward input gradient");
  ensure_finite(grads.kernel, "conv2d_backward kernel gradient");
  ensure_finite(grads.bias, "conv2d_backward bias gradient");
  return grads;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  ensure_finite(out, "relu_forward");
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  check_same_shape(input.shape(), grad_out.shape(), "relu_backward");
  Tensor out(input.shape());
  auto x = input.data();
  auto g = grad_out.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i] > 0.0 ? g[i] : 0.0;
  ensure_finite(out, "relu_backward");
  return out;
}

int pooled_size(int size, int window, int stride, bool same_pad) {
  if (same_pad) return (size + stride - 1) / stride;
  return size < window ? 0 : (size - window) / stride + 1;
}

PoolResult maxpool2d(const Tensor& input, int window, int stride,
                     bool same_pad) {
  if (window != 2 && window != 3) {
    throw Error(fmt::format("maxpool2d: window {} not in {{2,3}}", window));
  }
  if (stride != 1 && stride != 2) {
    throw Error(fmt::format("maxpool2d: stride {} not in {{1,2}}", stride));
  }
  const Shape& in = input.shape();
  const int oh = pooled_size(in.h, window, stride, same_pad);
  const int ow = pooled_size(in.w, window, stride, same_pad);
  if (oh < 1 || ow < 1) {
    throw Error(fmt::format("maxpool2d: {}x{} input too small for window {}",
                            in.h, in.w, window));
  }
  // Same mode pads (total) so the last window ends at the border; the
  // leading side gets the smaller half.
  const int pad_y =
      same_pad ? std::max((oh - 1) * stride + window - in.h, 0) / 2 : 0;
  const int pad_x =
      same_pad ? std::max((ow - 1) * stride + window - in.w, 0) / 2 : 0;

  PoolResult r{Tensor(Shape{in.n, in.c, oh, ow}), {}};
  r.argmax.resize(r.output.size());
  std::size_t out_i = 0;
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++out_i) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = 0;
          bool found = false;
          for (int dy = 0; dy < window; ++dy) {
            const int sy = y * stride + dy - pad_y;
            if (sy < 0 || sy >= in.h) continue;
            for (int dx = 0; dx < window; ++dx) {
              const int sx = x * stride + dx - pad_x;
              if (sx < 0 || sx >= in.w) continue;
              const std::size_t idx = input.index(n, c, sy, sx);
              if (!found || input.data()[idx] > best) {
                best = input.data()[idx];
                best_i = idx;
                found = true;
              }
            }
          }
          r.output.data()[out_i] = best;
          r.argmax[out_i] = best_i;
        }
      }
    }
  }
  ensure_finite(r.output, "maxpool2d");
  return r;
}

Tensor maxpool2d_backward(const Shape& input_shape,
                          std::span<const std::size_t> argmax,
                          const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) {
    throw Error("maxpool2d_backward: argmax does not match grad_out");
  }
  Tensor grad(input_shape);
  auto dst = grad.data();
  auto src = grad_out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[argmax[i]] += src[i];
  return grad;
}

Tensor channel_concat(std::span<const Tensor> inputs) {
  if (inputs.empty()) throw Error("channel_concat: no inputs");
  const Shape& first = inputs.front().shape();
  int channels = 0;
  for (const Tensor& t : inputs) {
    const Shape& s = t.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw Error(fmt::format("channel_concat: {} incompatible with {}",
                              s.str(), first.str()));
    }
    channels += s.c;
  }
  Tensor out(Shape{first.n, channels, first.h, first.w});
  for (int n = 0; n < first.n; ++n) {
    double* dst = out.sample(n).data();
    for (const Tensor& t : inputs) {
      auto src = t.sample(n);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Tensor channel_slice(const Tensor& input, int begin, int count) {
  const Shape& s = input.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw Error(fmt::format("channel_slice: [{}, {}) outside {} channels",
                            begin, begin + count, s.c));
  }
  Tensor out(Shape{s.n, count, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    auto src = input.sample(n).subspan(static_cast<std::size_t>(begin) * s.plane(),
                                       static_cast<std::size_t>(count) * s.plane());
    std::copy(src.begin(), src.end(), out.sample(n).begin());
  }
  return out;
}

Tensor bilinear_resize(const Tensor& input, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw Error(fmt::format("bilinear_resize: bad target size {}x{}", out_h, out_w));
  }
  const Shape& in = input.shape();
  if (in.h == out_h && in.w == out_w) return input;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int in_size, int out_size) {
    std::vector<Tap> t(static_cast<std::size_t>(out_size));
    const double scale = static_cast<double>(in_size) / out_size;
    for (int d = 0; d < out_size; ++d) {
      double src = (d + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
      const int lo = static_cast<int>(std::floor(src));
      t[static_cast<std::size_t>(d)] = {lo, std::min(lo + 1, in_size - 1), src - lo};
    }
    return t;
  };
  const auto ty = taps(in.h, out_h);
  const auto tx = taps(in.w, out_w);

  Tensor out(Shape{in.n, in.c, out_h, out_w});
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (int y = 0; y < out_h; ++y) {
        const Tap& a = ty[static_cast<std::size_t>(y)];
        const double* r0 = src.data() + static_cast<std::size_t>(a.lo) * in.w;
        const double* r1 = src.data() + static_cast<std::size_t>(a.hi) * in.w;
        for (int x = 0; x < out_w; ++x) {
          const Tap& b = tx[static_cast<std::size_t>(x)];
          const double top = r0[b.lo] + b.frac * (r0[b.hi] - r0[b.lo]);
          const double bottom = r1[b.lo] + b.frac * (r1[b.hi] - r1[b.lo]);
          dst[static_cast<std::size_t>(y) * out_w + x] =
              top + a.frac * (bottom - top);
        }
      }
    }
  }
  ensure_finite(out, "bilinear_resize");
  return out;
}

}  // namespace ninconv
