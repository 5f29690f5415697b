#include "ninconv/inception.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "ninconv/error.hpp"
#include "ninconv/rng.hpp"

namespace ninconv {

std::string_view to_string(VariantTag tag) {
  switch (tag) {
    case VariantTag::googlenet_inception: return "googlenet_inception";
    case VariantTag::no_pool_projection: return "no_pool_projection";
    case VariantTag::with_7x7: return "with_7x7";
    case VariantTag::with_7x7_9x9: return "with_7x7_9x9";
  }
  return "?";
}

VariantTag parse_variant(std::string_view text) {
  for (VariantTag t : {VariantTag::googlenet_inception, VariantTag::no_pool_projection,
                       VariantTag::with_7x7, VariantTag::with_7x7_9x9}) {
    if (to_string(t) == text) return t;
  }
  throw ConfigError(fmt::format("unknown inception variant '{}'", text));
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::skin: return "skin";
    case Task::segmentation: return "segmentation";
    case Task::restoration: return "restoration";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  for (Task t : {Task::skin, Task::segmentation, Task::restoration}) {
    if (to_string(t) == text) return t;
  }
  throw ConfigError(fmt::format("unknown task '{}'", text));
}

std::string_view to_string(InitKind kind) {
  return kind == InitKind::zeros ? "zeros" : "fan_in_uniform";
}

InitKind parse_init(std::string_view text) {
  if (text == "zeros") return InitKind::zeros;
  if (text == "fan_in_uniform") return InitKind::fan_in_uniform;
  throw ConfigError(fmt::format("unknown init '{}'", text));
}

int InceptionVariant::out_channels() const {
  int total = pool_projection;
  for (const BranchWidth& b : branches) total += b.out;
  return total;
}

InceptionVariant InceptionVariant::standard(VariantTag tag, int width) {
  if (width < 1) throw Error(fmt::format("trunk width {} < 1", width));
  auto scaled = [width](int base) { return std::max(1, (base * width + 32) / 64); };
  InceptionVariant v;
  v.tag = tag;
  v.branches = {{1, 0, scaled(8)}, {3, 0, 0}, {5, scaled(16), scaled(16)}};
  switch (tag) {
    case VariantTag::googlenet_inception:
      v.pool_projection = scaled(8);
      break;
    case VariantTag::no_pool_projection:
      break;
    case VariantTag::with_7x7:
      v.branches.push_back({7, scaled(8), scaled(8)});
      break;
    case VariantTag::with_7x7_9x9:
      v.branches.push_back({7, scaled(8), scaled(8)});
      v.branches.push_back({9, scaled(8), scaled(8)});
      break;
  }
  // The 3x3 branch takes whatever the convolution branches leave of the trunk
  // width; the pool projection comes on top.
  int rest = width;
  for (const BranchWidth& b : v.branches) rest -= b.out;
  if (rest < 1) {
    throw ConfigError(fmt::format("trunk width {} too narrow for variant {}", width,
                                  to_string(tag)));
  }
  v.branches[1] = {3, rest, rest};
  return v;
}

ArchitectureSpec ArchitectureSpec::for_task(Task task, int n_inception,
                                            VariantTag variant, int width,
                                            int classes) {
  ArchitectureSpec a;
  a.task = task;
  a.n_inception = n_inception;
  a.width = width;
  a.variant = InceptionVariant::standard(variant, width);
  switch (task) {
    case Task::skin:
      a.input_channels = 3;
      a.output_channels = 1;
      a.loss_kind = LossKind::euclidean;
      break;
    case Task::segmentation:
      a.input_channels = 3;
      a.output_channels = classes;
      a.loss_kind = LossKind::softmax;
      break;
    case Task::restoration:
      a.input_channels = 1;
      a.output_channels = 1;
      a.loss_kind = LossKind::euclidean;
      break;
  }
  return a;
}

void ArchitectureSpec::validate() const {
  if (n_inception < 0) throw ConfigError("n_inception must be >= 0");
  if (width < 1) throw ConfigError("width must be >= 1");
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  if (task == Task::segmentation) {
    if (output_channels < 2) throw ConfigError("segmentation needs >= 2 classes");
    if (loss_kind != LossKind::softmax) {
      throw ConfigError("segmentation is trained with the softmax loss");
    }
  } else if (output_channels != 1 || loss_kind != LossKind::euclidean) {
    throw ConfigError(fmt::format("{} produces one map with the euclidean loss",
                                  to_string(task)));
  }
  for (const BranchWidth& b : variant.branches) {
    if (b.out < 1 || (b.kernel > 1 && b.reduce < 1) || b.kernel % 2 == 0) {
      throw ConfigError(fmt::format("bad {}x{} branch widths", b.kernel, b.kernel));
    }
  }
}

int n_inception_for_depth(int depth_layers) {
  if (depth_layers < 4 || (depth_layers - 4) % 2 != 0) {
    throw ConfigError(fmt::format(
        "depth {} is not 4 + 2 * (number of inception modules)", depth_layers));
  }
  return (depth_layers - 4) / 2;
}

LayerSpec build_inception_module(const InceptionVariant& variant,
                                 int in_channels, const std::string& name) {
  if (in_channels < 1) throw Error("inception module needs input channels");
  if (variant.branches.empty()) throw Error("inception module without branches");
  std::vector<std::vector<LayerSpec>> branches;
  for (const BranchWidth& b : variant.branches) {
    if (b.out < 1 || (b.kernel > 1 && b.reduce < 1)) {
      throw Error(fmt::format("{}: zero filter count in the {}x{} branch", name,
                              b.kernel, b.kernel));
    }
    const std::string k = fmt::format("{}x{}", b.kernel, b.kernel);
    std::vector<LayerSpec> seq;
    if (b.kernel == 1) {
      seq.push_back(LayerSpec::conv(name + "/1x1", in_channels, b.out, 1));
      seq.push_back(LayerSpec::relu(name + "/relu_1x1"));
    } else {
      seq.push_back(LayerSpec::conv(name + "/" + k + "_reduce", in_channels, b.reduce, 1));
      seq.push_back(LayerSpec::relu(name + "/relu_" + k + "_reduce"));
      seq.push_back(LayerSpec::conv(name + "/" + k, b.reduce, b.out, b.kernel));
      seq.push_back(LayerSpec::relu(name + "/relu_" + k));
    }
    branches.push_back(std::move(seq));
  }
  if (variant.pool_projection > 0) {
    branches.push_back({LayerSpec::maxpool(name + "/pool", 3, 1),
                        LayerSpec::conv(name + "/pool_proj", in_channels,
                                        variant.pool_projection, 1),
                        LayerSpec::relu(name + "/relu_pool_proj")});
  }
  return LayerSpec::branch_group(name, std::move(branches));
}

void initialize(ParameterStore& params, InitKind kind, std::uint64_t seed) {
  Rng rng(seed);
  for (ParamGroup& g : params.groups()) {
    std::fill(g.conv.bias.begin(), g.conv.bias.end(), 0.0);
    if (kind == InitKind::zeros) {
      g.conv.kernel.fill(0.0);
      continue;
    }
    const Shape& k = g.conv.kernel.shape();
    const double bound = std::sqrt(6.0 / (static_cast<double>(k.c) * k.h * k.w));
    for (double& v : g.conv.kernel.storage()) v = rng.uniform(-bound, bound);
  }
}

BuiltNetwork build_network(const ArchitectureSpec& arch, InitKind init,
                           std::uint64_t seed) {
  arch.validate();
  const int w = arch.width;
  NetworkSpec net;
  net.input_channels = arch.input_channels;
  net.layers.push_back(LayerSpec::conv("conv1", arch.input_channels, w, 7));
  net.layers.push_back(LayerSpec::relu("relu1"));
  net.layers.push_back(LayerSpec::conv("conv2_reduce", w, w, 1));
  net.layers.push_back(LayerSpec::relu("relu2_reduce"));
  net.layers.push_back(LayerSpec::conv("conv2", w, w, 3));
  net.layers.push_back(LayerSpec::relu("relu2"));
  int channels = w;
  for (int i = 1; i <= arch.n_inception; ++i) {
    net.layers.push_back(
        build_inception_module(arch.variant, channels, fmt::format("inception{}", i)));
    channels = arch.variant.out_channels();
  }
  // The last convolution has no activation.
  net.layers.push_back(LayerSpec::conv("conv3", channels, arch.output_channels, 5));

  BuiltNetwork built{std::move(net), {}};
  built.params = make_parameters(built.net);
  initialize(built.params, init, seed);
  return built;
}

namespace {

void rf_sequence(const std::vector<LayerSpec>& layers, int& rf, int& jump,
                 std::vector<ReceptiveFieldResult::Step>* steps) {
  for (const LayerSpec& l : layers) {
    switch (l.kind) {
      case LayerKind::conv:
        rf += (l.kernel - 1) * jump;
        break;
      case LayerKind::maxpool:
        rf += (l.kernel - 1) * jump;
        jump *= l.stride;
        break;
      case LayerKind::relu:
        continue;
      case LayerKind::branch_group: {
        int best_rf = rf;
        int best_jump = jump;
        for (const auto& b : l.branches) {
          int r = rf;
          int j = jump;
          rf_sequence(b, r, j, nullptr);
          best_rf = std::max(best_rf, r);
          best_jump = std::max(best_jump, j);
        }
        rf = best_rf;
        jump = best_jump;
        break;
      }
    }
    if (steps) steps->push_back({l.name, rf, jump});
  }
}

std::size_t branch_kernel_params(const InceptionVariant& v, int in) {
  std::size_t total = static_cast<std::size_t>(in) * v.pool_projection;
  for (const BranchWidth& b : v.branches) {
    if (b.kernel == 1) {
      total += static_cast<std::size_t>(in) * b.out;
    } else {
      total += static_cast<std::size_t>(in) * b.reduce +
               static_cast<std::size_t>(b.kernel) * b.kernel * b.reduce * b.out;
    }
  }
  return total;
}

std::size_t branch_bias_params(const InceptionVariant& v) {
  std::size_t total = static_cast<std::size_t>(v.pool_projection);
  for (const BranchWidth& b : v.branches) total += b.kernel == 1 ? b.out : b.reduce + b.out;
  return total;
}

}  // namespace

ReceptiveFieldResult receptive_field(const NetworkSpec& net) {
  ReceptiveFieldResult r;
  int rf = 1;
  int jump = 1;
  rf_sequence(net.layers, rf, jump, &r.layers);
  r.rf = rf;
  return r;
}

std::vector<RfScenario> receptive_field_scenarios() {
  std::vector<RfScenario> out;
  {
    NetworkSpec n;
    n.layers = {LayerSpec::conv("conv_a", 1, 1, 3), LayerSpec::conv("conv_b", 1, 1, 3)};
    out.push_back({"3x3 kernels", std::move(n)});
  }
  {
    NetworkSpec n;
    n.layers = {LayerSpec::conv("conv_a", 1, 1, 3), LayerSpec::maxpool("pool_a", 2, 2),
                LayerSpec::conv("conv_b", 1, 1, 3), LayerSpec::maxpool("pool_b", 2, 2)};
    out.push_back({"3x3 kernels with pooling", std::move(n)});
  }
  {
    NetworkSpec n;
    n.layers = {LayerSpec::conv("conv_a", 1, 1, 7), LayerSpec::conv("conv_b", 1, 1, 7)};
    out.push_back({"7x7 kernels", std::move(n)});
  }
  return out;
}

std::vector<ArchitectureRow> architecture_rows(const ArchitectureSpec& arch) {
  arch.validate();
  const std::size_t w = static_cast<std::size_t>(arch.width);
  std::vector<ArchitectureRow> rows;
  rows.push_back({"Convolution 1", "7x7", arch.width, 1, {}, 0,
                  49 * w * static_cast<std::size_t>(arch.input_channels), w});
  rows.push_back({"Convolution 2", "3x3", arch.width, 2,
                  {{3, arch.width, arch.width}}, 0, w * w + 9 * w * w, 2 * w});
  int channels = arch.width;
  for (int i = 1; i <= arch.n_inception; ++i) {
    rows.push_back({fmt::format("Inception {}", i), "", arch.variant.out_channels(), 2,
                    arch.variant.branches, arch.variant.pool_projection,
                    branch_kernel_params(arch.variant, channels),
                    branch_bias_params(arch.variant)});
    channels = arch.variant.out_channels();
  }
  const std::size_t out = static_cast<std::size_t>(arch.output_channels);
  rows.push_back({"Convolution 3", "5x5", arch.output_channels, 1, {}, 0,
                  25 * out * static_cast<std::size_t>(channels), out});
  rows.push_back({arch.loss_kind == LossKind::euclidean ? "Euclidean" : "Softmax", "",
                  arch.output_channels, 0, {}, 0, 0, 0});
  return rows;
}

bool is_reference_architecture(const ArchitectureSpec& arch) {
  return arch.task == Task::skin && arch.n_inception == 8 && arch.width == 64 &&
         arch.variant.tag == VariantTag::with_7x7 && arch.input_channels == 3 &&
         arch.output_channels == 1 &&
         arch.variant.out_channels() ==
             InceptionVariant::standard(VariantTag::with_7x7).out_channels();
}

std::vector<PublishedCount> compare_with_published(const ArchitectureSpec& arch) {
  if (!is_reference_architecture(arch)) return {};
  const auto rows = architecture_rows(arch);
  std::vector<PublishedCount> out;
  auto add = [&out](std::string row, std::size_t published, std::size_t computed) {
    const std::size_t rounded = (computed + 500) / 1000 * 1000;
    out.push_back({std::move(row), published, computed, rounded == published});
  };
  std::size_t total = 0;
  for (const auto& r : rows) total += r.kernel_params;
  add("Convolution 1", 9000, rows[0].kernel_params);
  add("Convolution 2", 41000, rows[1].kernel_params);
  add("Inception (each)", 23000, rows[2].kernel_params);
  add("Convolution 3", 16000, rows[rows.size() - 2].kernel_params);
  add("Total", 300000, total);
  return out;
}

std::string architecture_table(const ArchitectureSpec& arch) {
  const auto rows = architecture_rows(arch);
  const BuiltNetwork built = build_network(arch, InitKind::zeros, 0);
  const ParameterCount count = count_parameters(built.net);

  // Branch columns present in this variant (Convolution 2 uses the 3x3 pair).
  std::vector<int> kernels = {1, 3, 5};
  for (const BranchWidth& b : arch.variant.branches) {
    if (std::find(kernels.begin(), kernels.end(), b.kernel) == kernels.end()) {
      kernels.push_back(b.kernel);
    }
  }
  const bool pool = arch.variant.pool_projection > 0;

  std::string header = fmt::format("{:<16}{:<8}{:<14}{:>6}", "type", "kernel",
                                   "output size", "depth");
  for (int k : kernels) {
    if (k == 1) {
      header += fmt::format("{:>8}", "#1x1");
    } else {
      header += fmt::format("{:>10}{:>8}", fmt::format("#{0}x{0}red", k),
                            fmt::format("#{0}x{0}", k));
    }
  }
  if (pool) header += fmt::format("{:>10}", "pool proj");
  header += fmt::format("{:>10}{:>10}\n", "params", "+bias");

  std::string body;
  for (const auto& r : rows) {
    std::string line = fmt::format("{:<16}{:<8}{:<14}{:>6}", r.type, r.kernel,
                                   fmt::format("HxWx{}", r.out_channels),
                                   r.depth ? std::to_string(r.depth) : "");
    for (int k : kernels) {
      auto it = std::find_if(r.branches.begin(), r.branches.end(),
                             [k](const BranchWidth& b) { return b.kernel == k; });
      const bool has = it != r.branches.end();
      if (k == 1) {
        line += fmt::format("{:>8}", has ? std::to_string(it->out) : "");
      } else {
        line += fmt::format("{:>10}{:>8}", has ? std::to_string(it->reduce) : "",
                            has ? std::to_string(it->out) : "");
      }
    }
    if (pool) {
      line += fmt::format("{:>10}", r.pool_projection ? std::to_string(r.pool_projection) : "");
    }
    line += r.kernel_params || r.bias_params
                ? fmt::format("{:>10}{:>10}\n", r.kernel_params, r.kernel_params + r.bias_params)
                : std::string("\n");
    body += line;
  }

  std::string out = header + body;
  out += fmt::format("\nvariant: {}  modules: {}  width: {}  module output: {}\n",
                     to_string(arch.variant.tag), arch.n_inception, arch.width,
                     arch.variant.out_channels());
  out += fmt::format("convolution depth: {}\n", built.net.conv_depth());
  out += fmt::format("receptive field: {}\n", receptive_field(built.net).rf);
  out += fmt::format("parameters: {} kernel-only, {} with biases\n", count.kernel_only,
                     count.total);
  const auto published = compare_with_published(arch);
  if (!published.empty()) {
    out += "\ncomparison with the published Params column (kernel-only):\n";
    for (const auto& p : published) {
      out += fmt::format("  {:<18}published {:>7}  computed {:>7}  {}\n", p.row,
                         p.published, p.computed,
                         p.agrees ? "ok" : "WARNING: discrepancy");
    }
  }
  return out;
}

}  // namespace ninconv
