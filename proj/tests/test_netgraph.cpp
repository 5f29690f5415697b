#include <gtest/gtest.h>

#include "ninconv/error.hpp"
#include "ninconv/inception.hpp"
#include "ninconv/netgraph.hpp"
#include "oracles.hpp"

using namespace ninconv;

namespace {

void randomize(ParameterStore& params, std::uint64_t seed) {
  Rng rng(seed);
  for (ParamGroup& g : params.groups()) {
    for (double& v : g.conv.kernel.storage()) v = rng.uniform(-0.5, 0.5);
    for (double& v : g.conv.bias) v = rng.uniform(-0.1, 0.1);
  }
}

}  // namespace

TEST(Forward, SingleRelu) {
  NetworkSpec net{1, {LayerSpec::relu("r")}};
  ParameterStore params = make_parameters(net);
  const Tensor x({1, 1, 1, 2}, std::vector<double>{-1, 2});
  EXPECT_EQ(forward(net, params, x, false).output.storage(), (std::vector<double>{0, 2}));
}

TEST(Forward, IdentityBranchesStackCopies) {
  NetworkSpec net{2, {LayerSpec::branch_group("g", {{LayerSpec::conv("a", 2, 2, 1)},
                                                    {LayerSpec::conv("b", 2, 2, 1)}})}};
  ParameterStore params = make_parameters(net);
  for (const char* name : {"a", "b"}) {
    for (int c = 0; c < 2; ++c) params.at(name).conv.kernel.at(c, c, 0, 0) = 1.0;
  }
  Rng rng(1);
  const Tensor x = oracle::random_tensor({1, 2, 3, 3}, rng);
  const Tensor y = forward(net, params, x, false).output;
  ASSERT_EQ(y.shape(), (Shape{1, 4, 3, 3}));
  EXPECT_EQ(channel_slice(y, 0, 2), x);
  EXPECT_EQ(channel_slice(y, 2, 2), x);
}

TEST(Forward, DeterministicAndNamesFailingLayer) {
  BuiltNetwork b = build_network(ArchitectureSpec::for_task(Task::skin, 1, VariantTag::with_7x7, 8),
                                 InitKind::fan_in_uniform, 3);
  Rng rng(2);
  const Tensor x = oracle::random_tensor({1, 3, 9, 9}, rng);
  EXPECT_EQ(forward(b.net, b.params, x, false).output, forward(b.net, b.params, x, false).output);
  b.params.at("conv2").conv.bias[0] = std::numeric_limits<double>::infinity();
  try {
    forward(b.net, b.params, x, false);
    FAIL() << "expected a non-finite error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("conv2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(forward(b.net, b.params, Tensor({1, 2, 9, 9}), false), Error);
}

TEST(Backward, SingleConvEqualsConvBackward) {
  NetworkSpec net{2, {LayerSpec::conv("c", 2, 3, 3)}};
  ParameterStore params = make_parameters(net);
  randomize(params, 4);
  Rng rng(5);
  const Tensor x = oracle::random_tensor({2, 2, 4, 5}, rng);
  const Tensor g = oracle::random_tensor({2, 3, 4, 5}, rng);
  params.zero_grads();
  const ForwardResult fr = forward(net, params, x, true);
  const Tensor gi = backward(net, params, fr.tape, g);
  const ConvGrads ref = conv2d_backward(x, params.at("c").conv, g);
  EXPECT_EQ(gi, ref.input);
  EXPECT_EQ(params.at("c").grad_kernel, ref.kernel);
  EXPECT_EQ(params.at("c").grad_bias, ref.bias);
}

TEST(Backward, ZeroGradientGivesZeroParameterGradients) {
  BuiltNetwork b = build_network(ArchitectureSpec::for_task(Task::skin, 1, VariantTag::googlenet_inception, 8),
                                 InitKind::fan_in_uniform, 1);
  Rng rng(6);
  const Tensor x = oracle::random_tensor({1, 3, 6, 6}, rng);
  b.params.zero_grads();
  const ForwardResult fr = forward(b.net, b.params, x, true);
  backward(b.net, b.params, fr.tape, Tensor(fr.output.shape()));
  for (const ParamGroup& g : b.params.groups()) {
    for (double v : g.grad_kernel.data()) EXPECT_EQ(v, 0.0);
    for (double v : g.grad_bias) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, AccumulatesUntilZeroed) {
  NetworkSpec net{1, {LayerSpec::conv("c", 1, 1, 3)}};
  ParameterStore params = make_parameters(net);
  randomize(params, 2);
  const Tensor x({1, 1, 3, 3}, 1.0);
  const Tensor g({1, 1, 3, 3}, 1.0);
  params.zero_grads();
  const ForwardResult fr = forward(net, params, x, true);
  backward(net, params, fr.tape, g);
  const double once = params.at("c").grad_bias[0];
  backward(net, params, fr.tape, g);
  EXPECT_EQ(params.at("c").grad_bias[0], 2 * once);
  params.zero_grads();
  EXPECT_EQ(params.at("c").grad_bias[0], 0.0);
}

TEST(GradientCheck, ThreeLayerNetIsTight) {
  NetworkSpec net{2, {LayerSpec::conv("c1", 2, 3, 3), LayerSpec::relu("r1"),
                      LayerSpec::conv("c2", 3, 1, 3)}};
  ParameterStore params = make_parameters(net);
  randomize(params, 8);
  Rng rng(9);
  const Tensor x = oracle::random_tensor({2, 2, 5, 5}, rng);
  const GradientCheckReport r = gradient_check(net, params, x, LossKind::euclidean);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradientCheck, ConvReluOnTinyImage) {
  NetworkSpec net{1, {LayerSpec::conv("c", 1, 1, 3), LayerSpec::relu("r")}};
  ParameterStore params = make_parameters(net);
  randomize(params, 10);
  params.at("c").conv.bias[0] = 0.3;
  Rng rng(11);
  const Tensor x = oracle::random_tensor({1, 1, 4, 4}, rng);
  EXPECT_TRUE(gradient_check(net, params, x, LossKind::euclidean).passed);
}

TEST(GradientCheck, InceptionModuleBothLosses) {
  for (VariantTag tag : {VariantTag::with_7x7, VariantTag::googlenet_inception}) {
    const InceptionVariant v = InceptionVariant::standard(tag, 8);
    NetworkSpec net{3, {LayerSpec::conv("stem", 3, 8, 3), LayerSpec::relu("stem_relu"),
                        build_inception_module(v, 8, "inc"),
                        LayerSpec::conv("head", v.out_channels(), 2, 3)}};
    ParameterStore params = make_parameters(net);
    randomize(params, 12);
    Rng rng(13);
    const Tensor x = oracle::random_tensor({1, 3, 6, 6}, rng);
    EXPECT_TRUE(gradient_check(net, params, x, LossKind::euclidean).passed);
    EXPECT_TRUE(gradient_check(net, params, x, LossKind::softmax).passed);
  }
}

TEST(GradientCheck, CorruptedBackwardFailsNearTwo) {
  NetworkSpec net{1, {LayerSpec::conv("c", 1, 2, 3), LayerSpec::relu("r"),
                      LayerSpec::conv("d", 2, 1, 1)}};
  ParameterStore params = make_parameters(net);
  randomize(params, 14);
  Rng rng(15);
  const Tensor x = oracle::random_tensor({1, 1, 5, 5}, rng);
  GradientCheckOptions opts;
  opts.backward.flip_parameter_gradients = true;
  const GradientCheckReport r = gradient_check(net, params, x, LossKind::euclidean, opts);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_relative_error, 2.0, 1e-3);
}

TEST(GradientCheck, SubsamplesLargeNetworksDeterministically) {
  BuiltNetwork b = build_network(ArchitectureSpec::for_task(Task::restoration, 1, VariantTag::with_7x7, 32),
                                 InitKind::fan_in_uniform, 2);
  randomize(b.params, 16);
  GradientCheckOptions opts;
  opts.exhaustive_limit = 1000;
  opts.sample_count = 200;
  Rng rng(17);
  const Tensor x = oracle::random_tensor({1, 1, 5, 5}, rng);
  const GradientCheckReport a = gradient_check(b.net, b.params, x, LossKind::euclidean, opts);
  const GradientCheckReport c = gradient_check(b.net, b.params, x, LossKind::euclidean, opts);
  std::size_t checked = 0;
  for (const auto& e : a.entries) {
    if (e.name != "input") checked += e.checked;
  }
  EXPECT_GE(checked, 200u);
  EXPECT_LT(checked, b.params.total_count());
  EXPECT_EQ(a.max_relative_error, c.max_relative_error);
  EXPECT_TRUE(a.passed);
}

TEST(GradientCheck, RelativeErrorFloor) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1.0, -1.0), 2.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-13, 0.0), 0.1);
}

TEST(NetworkSpec, ValidationErrors) {
  NetworkSpec dup{1, {LayerSpec::relu("x"), LayerSpec::relu("x")}};
  EXPECT_THROW(dup.validate(), Error);
  NetworkSpec mismatch{1, {LayerSpec::conv("a", 1, 4, 3), LayerSpec::conv("b", 3, 1, 3)}};
  EXPECT_THROW(mismatch.validate(), Error);
  NetworkSpec ok{1, {LayerSpec::conv("a", 1, 4, 3), LayerSpec::relu("r"),
                     LayerSpec::conv("b", 4, 2, 1)}};
  EXPECT_EQ(ok.validate(), 2);
  EXPECT_EQ(ok.conv_depth(), 2);
}

TEST(CountParameters, CountsKernelsAndBiases) {
  NetworkSpec net{3, {LayerSpec::conv("a", 3, 4, 3), LayerSpec::relu("r"),
                      LayerSpec::conv("b", 4, 1, 1)}};
  const ParameterCount c = count_parameters(net);
  EXPECT_EQ(c.kernel_only, 3u * 4 * 9 + 4);
  EXPECT_EQ(c.total, c.kernel_only + 5);
  ASSERT_EQ(c.layers.size(), 2u);
  EXPECT_EQ(c.layers[0].name, "a");
  EXPECT_EQ(make_parameters(net).total_count(), c.total);
}
