#pragma once

#include <cstdint>
#include <vector>

#include "ninconv/image.hpp"

namespace ninconv {

// Grayscale images made of a random linear intensity ramp plus a few
// axis-aligned rectangles of random contrast.
std::vector<Image> synthetic_gradient_images(int count, int size, std::uint64_t seed);

struct SegmentationExample {
  Image image;   // RGB
  Image labels;  // gray, 1 inside a disk, 0 elsewhere
};

// Bright tinted disks on a striped, noisy background.
std::vector<SegmentationExample> synthetic_disk_scenes(int count, int size,
                                                       std::uint64_t seed);

}  // namespace ninconv
