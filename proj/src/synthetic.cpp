#include "ninconv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ninconv/rng.hpp"

namespace ninconv {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

std::vector<Image> synthetic_gradient_images(int count, int size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::vector<double> v(static_cast<std::size_t>(size) * size);
    const double base = rng.uniform(70.0, 180.0);
    const double gx = rng.uniform(-1.2, 1.2);
    const double gy = rng.uniform(-1.2, 1.2);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        v[static_cast<std::size_t>(y) * size + x] =
            base + gx * (x - size / 2.0) + gy * (y - size / 2.0);
      }
    }
    const int rects = 2 + static_cast<int>(rng.below(3));
    for (int r = 0; r < rects; ++r) {
      const int w = 6 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size / 2)));
      const int h = 6 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size / 2)));
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - w + 1)));
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - h + 1)));
      const double delta = rng.uniform(-70.0, 70.0);
      for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) v[static_cast<std::size_t>(y) * size + x] += delta;
      }
    }
    Image img(size, size, 1);
    for (std::size_t p = 0; p < v.size(); ++p) img.samples[p] = to_byte(v[p]);
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<SegmentationExample> synthetic_disk_scenes(int count, int size,
                                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SegmentationExample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SegmentationExample ex{Image(size, size, 3), Image(size, size, 1)};
    // Background: oriented stripes plus per-pixel noise.
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double period = rng.uniform(4.0, 10.0);
    const double level = rng.uniform(60.0, 110.0);
    const double fx = std::cos(angle) * 2.0 * std::numbers::pi / period;
    const double fy = std::sin(angle) * 2.0 * std::numbers::pi / period;

    struct Disk {
      double cx, cy, r;
    };
    std::vector<Disk> disks;
    const int n_disks = 1 + static_cast<int>(rng.below(3));
    for (int d = 0; d < n_disks; ++d) {
      const double r = rng.uniform(5.0, 11.0);
      disks.push_back({rng.uniform(r, size - r), rng.uniform(r, size - r), r});
    }
    const double tint[3] = {rng.uniform(170.0, 220.0), rng.uniform(120.0, 170.0),
                            rng.uniform(90.0, 140.0)};

    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        bool inside = false;
        for (const Disk& d : disks) {
          const double dx = x + 0.5 - d.cx, dy = y + 0.5 - d.cy;
          inside = inside || dx * dx + dy * dy <= d.r * d.r;
        }
        const double stripe = 35.0 * std::sin(fx * x + fy * y);
        for (int c = 0; c < 3; ++c) {
          const double noise = rng.uniform(-20.0, 20.0);
          ex.image.at(y, x, c) = to_byte(inside ? tint[c] + noise : level + stripe + noise);
        }
        ex.labels.at(y, x) = inside ? 1 : 0;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace ninconv
