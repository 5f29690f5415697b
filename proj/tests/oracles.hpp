#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's numeric kernels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ninconv/rng.hpp"
#include "ninconv/tensor.hpp"

namespace oracle {

inline ninconv::Tensor random_tensor(ninconv::Shape s, ninconv::Rng& rng, double lo = -1.0,
                                     double hi = 1.0) {
  ninconv::Tensor t(s);
  for (double& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

// Direct same-padded, stride-1 convolution.
inline ninconv::Tensor conv2d(const ninconv::Tensor& x, const ninconv::Tensor& k,
                              const std::vector<double>& bias) {
  const auto xs = x.shape();
  const auto ks = k.shape();
  const int ph = (ks.h - 1) / 2, pw = (ks.w - 1) / 2;
  ninconv::Tensor y(ninconv::Shape{xs.n, ks.n, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int o = 0; o < ks.n; ++o)
      for (int yy = 0; yy < xs.h; ++yy)
        for (int xx = 0; xx < xs.w; ++xx) {
          double acc = bias[static_cast<std::size_t>(o)];
          for (int i = 0; i < ks.c; ++i)
            for (int dy = 0; dy < ks.h; ++dy)
              for (int dx = 0; dx < ks.w; ++dx) {
                const int sy = yy + dy - ph, sx = xx + dx - pw;
                if (sy < 0 || sy >= xs.h || sx < 0 || sx >= xs.w) continue;
                acc += x.at(n, i, sy, sx) * k.at(o, i, dy, dx);
              }
          y.at(n, o, yy, xx) = acc;
        }
  return y;
}

// Sliding-window maximum with -inf padding; pads split as the pooling op does.
inline ninconv::Tensor maxpool(const ninconv::Tensor& x, int window, int stride) {
  const auto s = x.shape();
  auto out_size = [&](int size) { return (size + stride - 1) / stride; };
  const int oh = out_size(s.h), ow = out_size(s.w);
  const int pad_h = std::max((oh - 1) * stride + window - s.h, 0) / 2;
  const int pad_w = std::max((ow - 1) * stride + window - s.w, 0) / 2;
  ninconv::Tensor y(ninconv::Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx) {
          double best = -INFINITY;
          for (int dy = 0; dy < window; ++dy)
            for (int dx = 0; dx < window; ++dx) {
              const int sy = yy * stride + dy - pad_h, sx = xx * stride + dx - pad_w;
              if (sy < 0 || sy >= s.h || sx < 0 || sx >= s.w) continue;
              best = std::max(best, x.at(n, c, sy, sx));
            }
          y.at(n, c, yy, xx) = best;
        }
  return y;
}

// Probability that a random positive outranks a random negative, ties 1/2.
inline double pairwise_auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!truth[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Central difference of f around values[i].
inline double central_difference(std::span<double> values, std::size_t i,
                                  const std::function<double()>& f, double h = 1e-5) {
  const double saved = values[i];
  values[i] = saved + h;
  const double up = f();
  values[i] = saved - h;
  const double down = f();
  values[i] = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12});
}

}  // namespace oracle
