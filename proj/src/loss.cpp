#include "ninconv/loss.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "ninconv/error.hpp"

namespace ninconv {

LossResult euclidean_loss(const Tensor& pred, const Tensor& target,
                          LossNormalization normalization) {
  if (!(pred.shape() == target.shape())) {
    throw Error(fmt::format("euclidean_loss: prediction {} vs target {}",
                            pred.shape().str(), target.shape().str()));
  }
  const Shape& s = pred.shape();
  double denom = s.n;
  if (normalization == LossNormalization::per_pixel) {
    denom *= static_cast<double>(s.c) * s.h * s.w;
  }
  LossResult r{0.0, Tensor(s)};
  auto p = pred.data();
  auto t = target.data();
  auto g = r.grad.data();
  // Extended-precision sum: finite-difference checks difference two nearly
  // equal losses, and plain summation noise dominates small gradients.
  long double sum = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    sum += static_cast<long double>(d) * d;
    g[i] = 2.0 * d / denom;
  }
  r.loss = static_cast<double>(sum / denom);
  if (!std::isfinite(r.loss)) throw Error("euclidean_loss: non-finite loss");
  return r;
}

LossResult softmax_cross_entropy(const Tensor& logits, const LabelMap& labels,
                                 std::optional<int> ignore_index) {
  const Shape& s = logits.shape();
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w ||
      labels.labels.size() != static_cast<std::size_t>(s.n) * s.plane()) {
    throw Error(fmt::format("softmax_cross_entropy: labels {}x{}x{} vs logits {}",
                            labels.n, labels.h, labels.w, s.str()));
  }
  LossResult r{0.0, Tensor(s)};
  std::size_t counted = 0;
  long double sum = 0.0L;
  std::vector<double> prob(static_cast<std::size_t>(s.c));
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t p = 0; p < s.plane(); ++p) {
      const int label = labels.labels[static_cast<std::size_t>(n) * s.plane() + p];
      if (ignore_index && label == *ignore_index) continue;
      if (label < 0 || label >= s.c) {
        throw Error(fmt::format("softmax_cross_entropy: label {} outside [0, {})",
                                label, s.c));
      }
      ++counted;
      double peak = logits.plane(n, 0)[p];
      for (int c = 1; c < s.c; ++c) peak = std::max(peak, logits.plane(n, c)[p]);
      double total = 0.0;
      for (int c = 0; c < s.c; ++c) {
        prob[static_cast<std::size_t>(c)] = std::exp(logits.plane(n, c)[p] - peak);
        total += prob[static_cast<std::size_t>(c)];
      }
      const double log_total = std::log(total);
      sum -= static_cast<long double>(logits.plane(n, label)[p] - peak) - log_total;
      for (int c = 0; c < s.c; ++c) {
        r.grad.plane(n, c)[p] =
            prob[static_cast<std::size_t>(c)] / total - (c == label ? 1.0 : 0.0);
      }
    }
  }
  if (counted > 0) {
    const double inv = 1.0 / static_cast<double>(counted);
    r.loss = static_cast<double>(sum / static_cast<long double>(counted));
    for (double& g : r.grad.storage()) g *= inv;
  }
  if (!std::isfinite(r.loss)) throw Error("softmax_cross_entropy: non-finite loss");
  return r;
}

}  // namespace ninconv
