#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ninconv/inception.hpp"
#include "ninconv/optim.hpp"

namespace ninconv {

// Flat `key = value` run configuration. Blank lines and '#' comments are
// ignored; unknown keys are rejected.
struct RunConfig {
  Task task = Task::skin;
  VariantTag variant = VariantTag::with_7x7;
  int n_inception = 8;
  int width = 64;
  int classes = 2;
  double lr = 0.001;
  double weight_decay = 0.0002;
  int batch_size = 8;
  int max_steps = 1000;
  std::uint64_t seed = 1;
  InitKind init = InitKind::fan_in_uniform;
  LossNormalization loss_normalization = LossNormalization::per_pixel;
  bool decay_biases = false;
  int patch_stride = 20;
  int checkpoint_every = 1000;
  std::optional<std::filesystem::path> train_manifest;
  std::optional<std::filesystem::path> eval_manifest;
  std::filesystem::path output_dir = "run";

  ArchitectureSpec architecture() const;
  TrainConfig train_config() const;
};

// Relative paths in the file resolve against `base_dir`.
RunConfig parse_run_config(std::string_view text,
                           const std::filesystem::path& base_dir = {},
                           std::string_view origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace ninconv
