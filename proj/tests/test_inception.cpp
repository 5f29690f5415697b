#include <gtest/gtest.h>

#include <numeric>

#include "ninconv/error.hpp"
#include "ninconv/inception.hpp"
#include "oracles.hpp"

using namespace ninconv;

namespace {

std::size_t kernel_params_with_prefix(const ParameterCount& c, const std::string& prefix) {
  std::size_t total = 0;
  for (const auto& l : c.layers) {
    if (l.name.starts_with(prefix)) total += l.kernel;
  }
  return total;
}

std::size_t module_kernel_params(VariantTag tag, int in = 64) {
  NetworkSpec net{in, {build_inception_module(InceptionVariant::standard(tag), in, "m")}};
  return count_parameters(net).kernel_only;
}

}  // namespace

TEST(Variant, DefaultWidths) {
  const InceptionVariant v = InceptionVariant::standard(VariantTag::with_7x7);
  ASSERT_EQ(v.branches.size(), 4u);
  EXPECT_EQ(v.branches[0].out, 8);
  EXPECT_EQ(v.branches[1].reduce, 32);
  EXPECT_EQ(v.branches[1].out, 32);
  EXPECT_EQ(v.branches[2].out, 16);
  EXPECT_EQ(v.branches[3].kernel, 7);
  EXPECT_EQ(v.branches[3].out, 8);
  EXPECT_EQ(v.pool_projection, 0);
}

TEST(Variant, OutputChannelsAreBranchSums) {
  for (VariantTag tag : {VariantTag::googlenet_inception, VariantTag::no_pool_projection,
                         VariantTag::with_7x7, VariantTag::with_7x7_9x9}) {
    for (int width : {8, 32, 64}) {
      const InceptionVariant v = InceptionVariant::standard(tag, width);
      int sum = v.pool_projection;
      for (const auto& b : v.branches) sum += b.out;
      EXPECT_EQ(v.out_channels(), sum);
      EXPECT_EQ(v.out_channels(), tag == VariantTag::googlenet_inception
                                      ? width + v.pool_projection
                                      : width);
    }
  }
}

TEST(Variant, ParseAndPrint) {
  EXPECT_EQ(parse_variant("with_7x7_9x9"), VariantTag::with_7x7_9x9);
  EXPECT_EQ(to_string(VariantTag::googlenet_inception), "googlenet_inception");
  EXPECT_THROW(parse_variant("with_11x11"), ConfigError);
}

TEST(Module, ParameterCounts) {
  EXPECT_EQ(module_kernel_params(VariantTag::with_7x7), 22848u);
  // 1x1: 64*8, 3x3: 64*40 + 9*40*40, 5x5: 64*16 + 25*16*16
  EXPECT_EQ(module_kernel_params(VariantTag::no_pool_projection),
            64u * 8 + 64 * 40 + 9 * 40 * 40 + 64 * 16 + 25 * 16 * 16);
  // The pool projection adds one 64 -> 8 1x1 convolution.
  EXPECT_EQ(module_kernel_params(VariantTag::googlenet_inception),
            module_kernel_params(VariantTag::no_pool_projection) + 64 * 8);
}

TEST(Module, StructureAndErrors) {
  const LayerSpec m = build_inception_module(InceptionVariant::standard(VariantTag::googlenet_inception),
                                             64, "inception1");
  ASSERT_EQ(m.kind, LayerKind::branch_group);
  ASSERT_EQ(m.branches.size(), 4u);
  EXPECT_EQ(m.branches[3][0].kind, LayerKind::maxpool);
  EXPECT_EQ(m.branches[3][0].kernel, 3);
  EXPECT_EQ(m.branches[3][0].stride, 1);
  EXPECT_EQ(m.branches[1][0].name, "inception1/3x3_reduce");
  for (const auto& branch : m.branches) EXPECT_EQ(branch.back().kind, LayerKind::relu);

  InceptionVariant bad = InceptionVariant::standard(VariantTag::with_7x7);
  bad.branches[2].out = 0;
  EXPECT_THROW(build_inception_module(bad, 64, "x"), Error);
  EXPECT_THROW(build_inception_module(bad, 0, "x"), Error);
}

TEST(Network, SkinReferenceCounts) {
  const ArchitectureSpec arch = ArchitectureSpec::for_task(Task::skin);
  const BuiltNetwork b = build_network(arch);
  EXPECT_EQ(b.net.conv_depth(), 20);
  EXPECT_EQ(arch.depth_layers(), 20);
  const ParameterCount c = count_parameters(b.net);
  EXPECT_EQ(c.kernel_only, 234752u);
  EXPECT_EQ(c.total, 235905u);
  EXPECT_EQ(kernel_params_with_prefix(c, "conv1"), 9408u);
  EXPECT_EQ(kernel_params_with_prefix(c, "conv2"), 40960u);
  for (int i = 1; i <= 8; ++i) {
    EXPECT_EQ(kernel_params_with_prefix(c, "inception" + std::to_string(i) + "/"), 22848u);
  }
  EXPECT_EQ(kernel_params_with_prefix(c, "conv3"), 1600u);
  EXPECT_TRUE(is_reference_architecture(arch));
}

TEST(Network, TaskHeadsAndShapes) {
  const BuiltNetwork seg =
      build_network(ArchitectureSpec::for_task(Task::segmentation, 8, VariantTag::with_7x7, 64, 11));
  EXPECT_EQ(seg.params.at("conv3").conv.kernel.size(), 17600u);
  EXPECT_EQ(seg.net.output_channels(), 11);

  const BuiltNetwork rest =
      build_network(ArchitectureSpec::for_task(Task::restoration, 1, VariantTag::with_7x7, 8));
  const Tensor y = forward(rest.net, rest.params, Tensor({1, 1, 37, 37}, 0.2), false).output;
  EXPECT_EQ(y.shape(), (Shape{1, 1, 37, 37}));
}

TEST(Network, DepthSettings) {
  const int depths[] = {8, 14, 20, 26};
  const int modules[] = {2, 5, 8, 11};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(n_inception_for_depth(depths[i]), modules[i]);
    const BuiltNetwork b =
        build_network(ArchitectureSpec::for_task(Task::skin, modules[i], VariantTag::with_7x7, 8));
    EXPECT_EQ(b.net.conv_depth(), depths[i]);
  }
  EXPECT_THROW(n_inception_for_depth(9), ConfigError);
  EXPECT_THROW(n_inception_for_depth(2), ConfigError);
}

TEST(Network, InitialisationIsSeededAndBounded) {
  const ArchitectureSpec arch = ArchitectureSpec::for_task(Task::skin, 1, VariantTag::with_7x7, 8);
  const BuiltNetwork a = build_network(arch, InitKind::fan_in_uniform, 5);
  const BuiltNetwork b = build_network(arch, InitKind::fan_in_uniform, 5);
  const BuiltNetwork c = build_network(arch, InitKind::fan_in_uniform, 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.params.groups().size(); ++i) {
    const ParamGroup& g = a.params.groups()[i];
    EXPECT_EQ(g.conv.kernel, b.params.groups()[i].conv.kernel);
    differs = differs || !(g.conv.kernel == c.params.groups()[i].conv.kernel);
    const Shape& s = g.conv.kernel.shape();
    const double bound = std::sqrt(6.0 / (s.c * s.h * s.w));
    for (double v : g.conv.kernel.data()) EXPECT_LE(std::abs(v), bound);
    for (double v : g.conv.bias) EXPECT_EQ(v, 0.0);
  }
  EXPECT_TRUE(differs);

  const BuiltNetwork z = build_network(arch, InitKind::zeros, 5);
  for (const ParamGroup& g : z.params.groups()) {
    for (double v : g.conv.kernel.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(ReceptiveField, FullAndShallowNetworks) {
  const ReceptiveFieldResult full = receptive_field(build_network(ArchitectureSpec::for_task(Task::skin)).net);
  EXPECT_EQ(full.rf, 61);
  int prev = 1;
  for (const auto& l : full.layers) {
    EXPECT_GE(l.rf, prev);
    prev = l.rf;
  }
  const ReceptiveFieldResult shallow =
      receptive_field(build_network(ArchitectureSpec::for_task(Task::skin, 2)).net);
  EXPECT_EQ(shallow.rf, 7 + 2 + 2 * 6 + 4);
}

TEST(ReceptiveField, Scenarios) {
  const auto scenarios = receptive_field_scenarios();
  ASSERT_EQ(scenarios.size(), 3u);
  EXPECT_EQ(receptive_field(scenarios[0].net).rf, 5);
  EXPECT_EQ(receptive_field(scenarios[1].net).rf, 10);
  EXPECT_EQ(receptive_field(scenarios[2].net).rf, 13);
}

TEST(ReceptiveField, GrowsWithEveryWideConvolution) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkSpec net{1, {}};
    const int layers = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < layers; ++i) {
      const int k = 1 + 2 * static_cast<int>(rng.below(4));
      net.layers.push_back(LayerSpec::conv("c" + std::to_string(i), 1, 1, k));
    }
    const int before = receptive_field(net).rf;
    const int k = 3 + 2 * static_cast<int>(rng.below(3));
    net.layers.push_back(LayerSpec::conv("extra", 1, 1, k));
    EXPECT_EQ(receptive_field(net).rf, before + k - 1);
  }
}

TEST(Analysis, TableFlagsPublishedDiscrepancies) {
  const ArchitectureSpec arch = ArchitectureSpec::for_task(Task::skin);
  const auto cmp = compare_with_published(arch);
  int disagreements = 0;
  for (const auto& c : cmp) disagreements += c.agrees ? 0 : 1;
  EXPECT_EQ(disagreements, 2);  // final convolution and the overall total
  const std::string table = architecture_table(arch);
  EXPECT_NE(table.find("receptive field: 61"), std::string::npos);
  EXPECT_NE(table.find("234752"), std::string::npos);
  EXPECT_NE(table.find("WARNING"), std::string::npos);

  const std::string pool = architecture_table(
      ArchitectureSpec::for_task(Task::skin, 8, VariantTag::googlenet_inception));
  EXPECT_NE(pool.find("pool proj"), std::string::npos);
}
