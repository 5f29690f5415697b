#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ninconv/netgraph.hpp"
#include "ninconv/tensor.hpp"

namespace ninconv {

// Binary layout, all integers little-endian:
//   "NINC" | u16 version | u32 metadata bytes | metadata (UTF-8 text)
//   | u32 tensor count | per tensor: u32 name bytes | name | u32 n, c, h, w
//   | n*c*h*w IEEE-754 doubles
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

struct CheckpointFile {
  std::string metadata;
  std::vector<NamedTensor> tensors;
  bool operator==(const CheckpointFile&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& file);
CheckpointFile decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const CheckpointFile& file, const std::filesystem::path& path);
CheckpointFile load_checkpoint(const std::filesystem::path& path);

// "<layer>.weight" (out, in, k, k) and "<layer>.bias" (out, 1, 1, 1) per
// convolution, in store order.
std::vector<NamedTensor> export_parameters(const ParameterStore& params);
// Every store entry must be present with a matching shape.
void import_parameters(ParameterStore& params, std::span<const NamedTensor> tensors);

}  // namespace ninconv
