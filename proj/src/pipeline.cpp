#include "ninconv/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numbers>

#include "ninconv/error.hpp"
#include "ninconv/ops.hpp"

namespace ninconv {

std::vector<int> window_offsets(int extent, int size, int stride) {
  if (size < 1 || stride < 1) throw Error("window size and stride must be >= 1");
  if (extent < size) {
    throw Error(fmt::format("extent {} is smaller than the window {}", extent, size));
  }
  std::vector<int> offsets;
  for (int o = 0; o + size <= extent; o += stride) offsets.push_back(o);
  if (offsets.back() + size < extent) offsets.push_back(extent - size);
  return offsets;
}

Extent decimated_extent(int h, int w, int side) {
  if (std::min(h, w) < 2) {
    throw Error(fmt::format("degenerate image {}x{} (smaller side < 2)", h, w));
  }
  if (h <= w) {
    return {side, static_cast<int>(std::lround(static_cast<double>(w) * side / h))};
  }
  return {static_cast<int>(std::lround(static_cast<double>(h) * side / w)), side};
}

Tensor image_to_tensor(const Image& image) {
  Tensor t(Shape{1, image.channels, image.height, image.width});
  for (int c = 0; c < image.channels; ++c) {
    auto plane = t.plane(0, c);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        plane[static_cast<std::size_t>(y) * image.width + x] = image.at(y, x, c) / 255.0;
      }
    }
  }
  return t;
}

Image tensor_to_image(const Tensor& t, int sample) {
  const Shape& s = t.shape();
  if (s.c != 1 && s.c != 3) throw Error("only 1- or 3-channel tensors convert to images");
  Image img(s.w, s.h, s.c);
  for (int c = 0; c < s.c; ++c) {
    auto plane = t.plane(sample, c);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        const double v = std::clamp(plane[static_cast<std::size_t>(y) * s.w + x], 0.0, 1.0);
        img.at(y, x, c) = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
      }
    }
  }
  return img;
}

Tensor labels_to_tensor(const Image& labels) {
  if (labels.channels != 1) throw Error("label images must be grayscale");
  Tensor t(Shape{1, 1, labels.height, labels.width});
  for (std::size_t i = 0; i < labels.samples.size(); ++i) t.data()[i] = labels.samples[i];
  return t;
}

namespace {

Tensor crop(const Tensor& t, int y0, int x0, int h, int w) {
  const Shape& s = t.shape();
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(n, c, y, x) = t.at(n, c, y0 + y, x0 + x);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<SamplePair> skin_input_windows(const Image& image, const Image& label,
                                           const std::string& source) {
  if (image.width != label.width || image.height != label.height) {
    throw Error(fmt::format("{}: image {}x{} and label {}x{} differ", source, image.width,
                            image.height, label.width, label.height));
  }
  if (label.channels != 1) throw Error(fmt::format("{}: label must be grayscale", source));
  const Extent e = decimated_extent(image.height, image.width);
  const Tensor input = bilinear_resize(image_to_tensor(image), e.h, e.w);

  Tensor mask(Shape{1, 1, label.height, label.width});
  for (std::size_t i = 0; i < label.samples.size(); ++i) {
    mask.data()[i] = label.samples[i] >= 128 ? 1.0 : 0.0;
  }
  Tensor target = bilinear_resize(mask, e.h, e.w);
  for (double& v : target.storage()) v = v >= 0.5 ? 1.0 : 0.0;

  std::vector<SamplePair> out;
  const bool along_x = e.h == kSkinSide;
  for (int o : window_offsets(along_x ? e.w : e.h, kSkinSide, kSkinSide)) {
    const int y = along_x ? 0 : o;
    const int x = along_x ? o : 0;
    out.push_back({crop(input, y, x, kSkinSide, kSkinSide),
                   crop(target, y, x, kSkinSide, kSkinSide), source, y, x});
  }
  return out;
}

Tensor inference_decimate(const Image& image) {
  const Extent e = decimated_extent(image.height, image.width);
  return bilinear_resize(image_to_tensor(image), e.h, e.w);
}

Image restore_output(const Tensor& prob_map, int h, int w) {
  return tensor_to_image(bilinear_resize(prob_map, h, w));
}

std::vector<SamplePair> extract_patches(const Image& degraded, const Image& clean, int size,
                                        int stride, const std::string& source) {
  if (degraded.width != clean.width || degraded.height != clean.height ||
      degraded.channels != clean.channels) {
    throw Error(fmt::format("{}: degraded and clean images differ in size", source));
  }
  if (degraded.width < size || degraded.height < size) {
    throw Error(fmt::format("{}: image {}x{} smaller than the {}x{} patch", source,
                            degraded.width, degraded.height, size, size));
  }
  const Tensor in = image_to_tensor(degraded);
  const Tensor target = image_to_tensor(clean);
  std::vector<SamplePair> out;
  for (int y : window_offsets(degraded.height, size, stride)) {
    for (int x : window_offsets(degraded.width, size, stride)) {
      out.push_back({crop(in, y, x, size, size), crop(target, y, x, size, size), source, y, x});
    }
  }
  return out;
}

std::vector<double> channel_mean(std::span<const Tensor> tensors) {
  if (tensors.empty()) throw Error("channel_mean: no tensors");
  const int channels = tensors.front().shape().c;
  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
  double count = 0.0;
  for (const Tensor& t : tensors) {
    const Shape& s = t.shape();
    if (s.c != channels) throw Error("channel_mean: channel counts differ");
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        for (double v : t.plane(n, c)) sum[static_cast<std::size_t>(c)] += v;
      }
    }
    count += static_cast<double>(s.n) * s.plane();
  }
  for (double& v : sum) v /= count;
  return sum;
}

namespace {

Tensor add_channelwise(const Tensor& t, std::span<const double> mean, double sign) {
  const Shape& s = t.shape();
  if (mean.size() != static_cast<std::size_t>(s.c)) {
    throw Error(fmt::format("mean has {} channels, tensor {}", mean.size(), s.c));
  }
  Tensor out = t;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (double& v : out.plane(n, c)) v += sign * mean[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

}  // namespace

Tensor mean_subtract(const Tensor& t, std::span<const double> mean) {
  return add_channelwise(t, mean, -1.0);
}

Tensor mean_add(const Tensor& t, std::span<const double> mean) {
  return add_channelwise(t, mean, 1.0);
}

const std::vector<int>& base_luminance_table() {
  static const std::vector<int> table = {
      16, 11, 10, 16, 24,  40,  51,  61,   //
      12, 12, 14, 19, 26,  58,  60,  55,   //
      14, 13, 16, 24, 40,  57,  69,  56,   //
      14, 17, 22, 29, 51,  87,  80,  62,   //
      18, 22, 37, 56, 68,  109, 103, 77,   //
      24, 35, 55, 64, 81,  104, 113, 92,   //
      49, 64, 78, 87, 103, 121, 120, 101,  //
      72, 92, 95, 98, 112, 100, 103, 99};
  return table;
}

std::vector<int> scaled_quant_table(int quality) {
  if (quality < 1 || quality > 100) {
    throw Error(fmt::format("quality {} outside [1, 100]", quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::vector<int> out;
  for (int q : base_luminance_table()) out.push_back(std::clamp((q * scale + 50) / 100, 1, 255));
  return out;
}

Image dct_degrade(const Image& gray, int quality) {
  if (gray.channels != 1) throw Error("dct_degrade: grayscale images only");
  const std::vector<int> table = scaled_quant_table(quality);

  // Orthonormal DCT-II basis: basis[u][x] = a(u) cos((2x + 1) u pi / 16).
  std::array<std::array<double, 8>, 8> basis{};
  for (int u = 0; u < 8; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int x = 0; x < 8; ++x) {
      basis[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }

  Image out = gray;
  using Block = std::array<std::array<double, 8>, 8>;
  for (int by = 0; by < gray.height; by += 8) {
    for (int bx = 0; bx < gray.width; bx += 8) {
      Block block{};
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          // Border blocks replicate the last row/column.
          const int sy = std::min(by + y, gray.height - 1);
          const int sx = std::min(bx + x, gray.width - 1);
          block[y][x] = gray.at(sy, sx) - 128.0;
        }
      }
      Block tmp{};
      Block coef{};
      for (int u = 0; u < 8; ++u) {
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int y = 0; y < 8; ++y) s += basis[u][y] * block[y][x];
          tmp[u][x] = s;
        }
      }
      for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
          double s = 0.0;
          for (int x = 0; x < 8; ++x) s += tmp[u][x] * basis[v][x];
          const double q = table[static_cast<std::size_t>(u * 8 + v)];
          coef[u][v] = std::round(s / q) * q;
        }
      }
      for (int y = 0; y < 8; ++y) {
        for (int v = 0; v < 8; ++v) {
          double s = 0.0;
          for (int u = 0; u < 8; ++u) s += basis[u][y] * coef[u][v];
          tmp[y][v] = s;
        }
      }
      for (int y = 0; y < 8 && by + y < gray.height; ++y) {
        for (int x = 0; x < 8 && bx + x < gray.width; ++x) {
          double s = 0.0;
          for (int v = 0; v < 8; ++v) s += tmp[y][v] * basis[v][x];
          out.at(by + y, bx + x) =
              static_cast<std::uint8_t>(std::clamp(std::round(s + 128.0), 0.0, 255.0));
        }
      }
    }
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open manifest '{}'", path.string()));
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(fmt::format("{}:{}: expected 'input<TAB>label'", path.string(), number));
    }
    ManifestEntry e{line.substr(0, tab), line.substr(tab + 1)};
    for (auto* p : {&e.input, &e.label}) {
      if (p->is_relative()) *p = base / *p;
      if (!std::filesystem::exists(*p)) {
        throw Error(fmt::format("{}:{}: missing file '{}'", path.string(), number, p->string()));
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write manifest '{}'", path.string()));
  out << "# input\tlabel\n";
  for (const auto& e : entries) out << e.input.string() << '\t' << e.label.string() << '\n';
}

}  // namespace ninconv
