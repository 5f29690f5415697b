#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ninconv/checkpoint.hpp"
#include "ninconv/image.hpp"
#include "ninconv/inception.hpp"
#include "ninconv/pipeline.hpp"

namespace ninconv {

// A built network together with the architecture it came from and the
// per-channel dataset mean subtracted from every input.
struct Model {
  ArchitectureSpec arch;
  std::vector<double> mean;
  NetworkSpec net;
  ParameterStore params;
};

Model make_model(const ArchitectureSpec& arch, InitKind init = InitKind::fan_in_uniform,
                 std::uint64_t seed = 0);

// Metadata is `key=value` lines; doubles are written with 17 significant
// digits so they survive the round trip.
std::string encode_model_metadata(const Model& model);
CheckpointFile model_checkpoint(const Model& model);
Model model_from_checkpoint(const CheckpointFile& file);

// Training pairs for one manifest entry: skin windows, whole segmentation
// images, or restoration patches (input is the degraded image, label the
// clean one).
std::vector<SamplePair> task_samples(Task task, const Image& input, const Image& label,
                                     int patch_stride, const std::string& source = {});

// Mean over all sample inputs, then subtracted in place. Restoration targets
// live in the same intensity space, so they are shifted too.
std::vector<double> center_samples(Task task, std::vector<SamplePair>& samples);

// Raw network output for one image, at network resolution (skin inputs are
// decimated first).
Tensor predict(const Model& model, const Image& image);

// Skin: 8-bit probability map at the original size. Segmentation: per-pixel
// argmax, ties to the lowest class. Restoration: clamped 8-bit image.
Image infer(const Model& model, const Image& image);

}  // namespace ninconv
