#include "ninconv/image.hpp"

#include <cctype>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <string>

#include "ninconv/error.hpp"

namespace ninconv {

Image::Image(int width_, int height_, int channels_, std::uint8_t fill)
    : width(width_), height(height_), channels(channels_) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw Error(fmt::format("invalid image {}x{}x{}", width, height, channels));
  }
  samples.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

namespace {

// Header tokenizer: whitespace and '#' comments separate fields.
struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos;

  void skip() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip();
    const std::size_t start = pos;
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && value <= 1'000'000'000) {
      value = value * 10 + (bytes[pos] - '0');
      ++pos;
    }
    if (pos == start) throw Error(fmt::format("netpbm: expected {} at byte {}", what, start));
    return value;
  }
};

}  // namespace

Image decode_netpbm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error("netpbm: unsupported magic at byte 0 (expected P5 or P6)");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  if (bytes.size() < 3 || !std::isspace(bytes[2])) {
    throw Error("netpbm: expected whitespace at byte 2");
  }
  Cursor cur{bytes, 2};
  const long width = cur.number("width");
  const long height = cur.number("height");
  const std::size_t maxval_pos = cur.pos;
  const long maxval = cur.number("maxval");
  if (width < 1 || height < 1 || width > 65535 || height > 65535) {
    throw Error(fmt::format("netpbm: bad dimensions {}x{}", width, height));
  }
  if (maxval != 255) {
    throw Error(fmt::format(
        "netpbm: unsupported depth (maxval {}) near byte {}; only 8-bit maxval 255 is read",
        maxval, maxval_pos));
  }
  if (cur.pos >= bytes.size() || !std::isspace(bytes[cur.pos])) {
    throw Error(fmt::format("netpbm: expected single whitespace at byte {}", cur.pos));
  }
  ++cur.pos;
  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  const std::size_t need = img.samples.size();
  if (bytes.size() - cur.pos < need) {
    throw Error(fmt::format("netpbm: truncated data at byte {} (need {} bytes, have {})",
                            bytes.size(), need, bytes.size() - cur.pos));
  }
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos),
            bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos + need), img.samples.begin());
  return img;
}

Image load_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_netpbm(bytes);
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<std::uint8_t> encode_netpbm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error("netpbm: only 1 or 3 channels can be written");
  }
  if (image.samples.size() !=
      static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw Error("netpbm: sample count does not match the image size");
  }
  const std::string header = fmt::format("P{}\n{} {}\n255\n", image.channels == 1 ? 5 : 6,
                                         image.width, image.height);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.samples.begin(), image.samples.end());
  return out;
}

void save_netpbm(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_netpbm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace ninconv
