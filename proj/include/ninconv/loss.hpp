#pragma once

#include <optional>
#include <vector>

#include "ninconv/tensor.hpp"

namespace ninconv {

enum class LossKind { euclidean, softmax };

// per_image: (1/N) sum_i ||Y_i - F(X_i)||^2.
// per_pixel: the same, further divided by c*h*w.
enum class LossNormalization { per_image, per_pixel };

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

LossResult euclidean_loss(const Tensor& pred, const Tensor& target,
                          LossNormalization normalization);

// Per-pixel class indices, (n, h, w) row-major.
struct LabelMap {
  int n = 1;
  int h = 1;
  int w = 1;
  std::vector<int> labels;
};

// Mean over non-ignored pixels of -log softmax(logits)[label].
LossResult softmax_cross_entropy(const Tensor& logits, const LabelMap& labels,
                                 std::optional<int> ignore_index = {});

}  // namespace ninconv
