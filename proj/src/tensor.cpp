#include "ninconv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "ninconv/error.hpp"

namespace ninconv {

std::string Shape::str() const {
  return fmt::format("{}x{}x{}x{}", n, c, h, w);
}

void validate_shape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw Error("invalid tensor shape " + s.str());
  }
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  validate_shape(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != shape_.numel()) {
    throw Error(fmt::format("tensor {} needs {} values, got {}", shape_.str(),
                            shape_.numel(), data_.size()));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void ensure_finite(std::span<const double> values, std::string_view where) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(fmt::format("non-finite value {} at index {} in {}",
                              values[i], i, where));
    }
  }
}

}  // namespace ninconv
