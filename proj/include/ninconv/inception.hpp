#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ninconv/loss.hpp"
#include "ninconv/netgraph.hpp"

namespace ninconv {

// Inception module families compared in the filter-set ablation.
enum class VariantTag {
  googlenet_inception,  // 1x1, 3x3, 5x5 and a max-pool projection on top
  no_pool_projection,   // 1x1, 3x3, 5x5
  with_7x7,             // 1x1, 3x3, 5x5, 7x7 (the default module)
  with_7x7_9x9,         // 1x1, 3x3, 5x5, 7x7, 9x9
};

std::string_view to_string(VariantTag tag);
VariantTag parse_variant(std::string_view text);

struct BranchWidth {
  int kernel = 1;
  int reduce = 0;  // 1x1 reduction width; unused for the 1x1 branch
  int out = 0;
};

struct InceptionVariant {
  VariantTag tag = VariantTag::with_7x7;
  std::vector<BranchWidth> branches;
  int pool_projection = 0;  // width of the 1x1 after the 3x3 max pool

  int out_channels() const;

  // Default branch widths for a trunk `width` channels wide. At width 64
  // these are 1x1:8, 5x5:16/16, 7x7:8/8 (9x9 copies 7x7, the pool projection
  // is 8) and the 3x3 branch fills the rest of the trunk width: 32 for
  // with_7x7, 40 without 7x7, 24 with 7x7 and 9x9. Other widths scale
  // proportionally.
  static InceptionVariant standard(VariantTag tag, int width = 64);
};

enum class Task { skin, segmentation, restoration };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

struct ArchitectureSpec {
  Task task = Task::skin;
  int n_inception = 8;
  int width = 64;  // trunk channels
  InceptionVariant variant = InceptionVariant::standard(VariantTag::with_7x7);
  int input_channels = 3;
  int output_channels = 1;
  LossKind loss_kind = LossKind::euclidean;

  // conv1 + conv2 (reduce, 3x3) + two per module + conv3
  int depth_layers() const { return 4 + 2 * n_inception; }
  void validate() const;

  static ArchitectureSpec for_task(Task task, int n_inception = 8,
                                   VariantTag variant = VariantTag::with_7x7,
                                   int width = 64, int classes = 2);
};

int n_inception_for_depth(int depth_layers);

// A single branch group; every convolution is followed by a ReLU.
LayerSpec build_inception_module(const InceptionVariant& variant,
                                 int in_channels, const std::string& name);

enum class InitKind { fan_in_uniform, zeros };

std::string_view to_string(InitKind kind);
InitKind parse_init(std::string_view text);

// Kernels uniform in +-sqrt(6 / fan_in) drawn in parameter order, biases 0.
// InitKind::zeros clears everything.
void initialize(ParameterStore& params, InitKind kind, std::uint64_t seed);

struct BuiltNetwork {
  NetworkSpec net;
  ParameterStore params;
};

BuiltNetwork build_network(const ArchitectureSpec& arch,
                           InitKind init = InitKind::fan_in_uniform,
                           std::uint64_t seed = 0);

struct ReceptiveFieldResult {
  struct Step {
    std::string name;
    int rf = 1;
    int jump = 1;
  };
  std::vector<Step> layers;
  int rf = 1;
};

// rf' = rf + (k - 1) * jump, jump' = jump * stride; a branch group takes the
// maximum over its branches.
ReceptiveFieldResult receptive_field(const NetworkSpec& net);

struct RfScenario {
  std::string name;
  NetworkSpec net;
};

// Two 3x3 convolutions; two (3x3 convolution, 2x2 stride-2 pool) blocks;
// two 7x7 convolutions.
std::vector<RfScenario> receptive_field_scenarios();

struct ArchitectureRow {
  std::string type;
  std::string kernel;
  int out_channels = 0;
  int depth = 0;
  std::vector<BranchWidth> branches;
  int pool_projection = 0;
  std::size_t kernel_params = 0;
  std::size_t bias_params = 0;
};

std::vector<ArchitectureRow> architecture_rows(const ArchitectureSpec& arch);

// True for the exact configuration tabulated in the reference architecture
// table (skin task, 8 modules with 7x7, 64 wide, RGB in, one map out).
bool is_reference_architecture(const ArchitectureSpec& arch);

struct PublishedCount {
  std::string row;
  std::size_t published = 0;  // as printed, in parameters
  std::size_t computed = 0;   // kernel-only
  bool agrees = false;        // equal after rounding to thousands
};

std::vector<PublishedCount> compare_with_published(const ArchitectureSpec& arch);

// Text table with type, kernel, output size, depth, branch widths and
// parameter counts, followed by receptive-field and total lines.
std::string architecture_table(const ArchitectureSpec& arch);

}  // namespace ninconv
