#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ninconv/tensor.hpp"

namespace ninconv {

// Convolution weights: kernel is (out_channels, in_channels, k_h, k_w).
struct ConvParams {
  Tensor kernel;
  std::vector<double> bias;
  int pad_h = 0;
  int pad_w = 0;

  int out_channels() const { return kernel.shape().n; }
  int in_channels() const { return kernel.shape().c; }
  int kernel_h() const { return kernel.shape().h; }
  int kernel_w() const { return kernel.shape().w; }

  // Zero kernel and bias with same-mode padding for odd k.
  static ConvParams same(int out_channels, int in_channels, int k);
};

struct ConvGrads {
  Tensor input;
  Tensor kernel;
  std::vector<double> bias;
};

// Stride-1 convolution with zero padding. Same-mode kernels (padding equal
// to half the kernel) keep (h, w) unchanged.
Tensor conv2d_forward(const Tensor& input, const ConvParams& params);
ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params,
                          const Tensor& grad_out);

Tensor relu_forward(const Tensor& input);
// Passes grad_out where input > 0; the subgradient at 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

struct PoolResult {
  Tensor output;
  // Flat input index of the winning element for each output element.
  std::vector<std::size_t> argmax;
};

// Max pooling, window in {2,3}, stride in {1,2}. same_pad pads with -inf so
// that the output has ceil(size / stride) rows/cols; otherwise only full
// windows are used. Ties go to the first element in row-major scan order.
PoolResult maxpool2d(const Tensor& input, int window, int stride,
                     bool same_pad);
int pooled_size(int size, int window, int stride, bool same_pad);
Tensor maxpool2d_backward(const Shape& input_shape,
                          std::span<const std::size_t> argmax,
                          const Tensor& grad_out);

Tensor channel_concat(std::span<const Tensor> inputs);
// Channels [begin, begin + count) of every sample.
Tensor channel_slice(const Tensor& input, int begin, int count);

// Bilinear resampling, pixel-centre convention:
// src = (dst + 0.5) * in / out - 0.5, clamped to the valid range.
Tensor bilinear_resize(const Tensor& input, int out_h, int out_w);

}  // namespace ninconv
