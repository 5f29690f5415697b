#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ninconv {

struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense (n, c, h, w) array of doubles in row-major order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }
  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const {
    return data_[index(n, c, y, x)];
  }

  // Contiguous (h, w) plane of one channel of one sample.
  std::span<double> plane(int n, int c) {
    return std::span<double>(data_).subspan(index(n, c, 0, 0), shape_.plane());
  }
  std::span<const double> plane(int n, int c) const {
    return std::span<const double>(data_).subspan(index(n, c, 0, 0),
                                                  shape_.plane());
  }
  // All channels of one sample.
  std::span<double> sample(int n) {
    return std::span<double>(data_).subspan(index(n, 0, 0, 0),
                                            shape_.plane() * shape_.c);
  }
  std::span<const double> sample(int n) const {
    return std::span<const double>(data_).subspan(index(n, 0, 0, 0),
                                                  shape_.plane() * shape_.c);
  }

  void fill(double v);
  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

void validate_shape(const Shape& s);

// Throws Error naming `where` if any element is NaN or infinite.
void ensure_finite(std::span<const double> values, std::string_view where);
inline void ensure_finite(const Tensor& t, std::string_view where) {
  ensure_finite(t.data(), where);
}

}  // namespace ninconv
