#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ninconv {

// 8-bit image, row-major with interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x, int c = 0) {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c = 0) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

// Binary PGM (P5) / PPM (P6) with maxval 255.
Image load_netpbm(const std::filesystem::path& path);
Image decode_netpbm(const std::vector<std::uint8_t>& bytes);
void save_netpbm(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_netpbm(const Image& image);

}  // namespace ninconv
