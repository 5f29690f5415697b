#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ninconv/image.hpp"
#include "ninconv/tensor.hpp"

namespace ninconv {

// Side length of the decimated skin-detection input.
inline constexpr int kSkinSide = 50;
// Patch side for compression-artifact reduction.
inline constexpr int kPatchSide = 37;

// Input/target pair with pixel-aligned supervision. Segmentation targets
// hold class indices stored as doubles.
struct SamplePair {
  Tensor input;
  Tensor target;
  std::string source;
  int offset_y = 0;
  int offset_x = 0;
};

// Offsets of `size`-long windows stepping by `stride`; when the grid does not
// reach the far border one more window is aligned to it.
std::vector<int> window_offsets(int extent, int size, int stride);

// Size after scaling so that the smaller side becomes `side`.
struct Extent {
  int h = 0;
  int w = 0;
};
Extent decimated_extent(int h, int w, int side = kSkinSide);

// Samples scaled to [0, 1], one tensor channel per image channel.
Tensor image_to_tensor(const Image& image);
// Clamps to [0, 1] and quantises with round-half-up: floor(v * 255 + 0.5).
Image tensor_to_image(const Tensor& t, int sample = 0);
// Raw values, no scaling (label maps).
Tensor labels_to_tensor(const Image& labels);

// Decimate so the smaller side is 50 and tile 50x50 windows along the longer
// side (stride 50 plus a border-aligned remainder window). Labels are
// resized the same way and re-binarised at 0.5; inputs are left in [0, 1].
std::vector<SamplePair> skin_input_windows(const Image& image, const Image& label,
                                           const std::string& source = {});

// Whole image decimated so the smaller side is 50, scaled to [0, 1].
Tensor inference_decimate(const Image& image);
// Bilinear back to (h, w), clamp to [0, 1], quantise to 8 bits.
Image restore_output(const Tensor& prob_map, int h, int w);

// Pairs of co-located size x size patches from a degraded/clean image pair.
std::vector<SamplePair> extract_patches(const Image& degraded, const Image& clean,
                                        int size = kPatchSide, int stride = 20,
                                        const std::string& source = {});

// Per-channel mean of tensors already scaled to [0, 1].
std::vector<double> channel_mean(std::span<const Tensor> tensors);
Tensor mean_subtract(const Tensor& t, std::span<const double> mean);
Tensor mean_add(const Tensor& t, std::span<const double> mean);

// Blockwise 8x8 DCT quantisation at JPEG quality `quality` (1..100).
Image dct_degrade(const Image& gray, int quality);
// Base luminance table scaled for `quality`, row-major 8x8.
std::vector<int> scaled_quant_table(int quality);
const std::vector<int>& base_luminance_table();

struct ManifestEntry {
  std::filesystem::path input;
  std::filesystem::path label;
};

// Tab-separated `input<TAB>label` lines; '#' starts a comment. Relative
// paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    std::span<const ManifestEntry> entries);

}  // namespace ninconv
