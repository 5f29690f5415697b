#include <gtest/gtest.h>

#include "ninconv/checkpoint.hpp"
#include "ninconv/error.hpp"
#include "ninconv/model.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

using namespace ninconv;

namespace {

Model trained_looking_model() {
  Model m = make_model(ArchitectureSpec::for_task(Task::skin, 1, VariantTag::with_7x7, 8),
                       InitKind::fan_in_uniform, 4);
  Rng rng(5);
  for (ParamGroup& g : m.params.groups()) {
    for (double& b : g.conv.bias) b = rng.uniform(-1, 1);
  }
  m.mean = {0.1, 1.0 / 3.0, 0.7071067811865476};
  return m;
}

}  // namespace

TEST(Checkpoint, LayoutStartsWithMagicAndVersion) {
  const auto bytes = encode_checkpoint({"k=v\n", {}});
  ASSERT_GE(bytes.size(), 6u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NINC");
  EXPECT_EQ(bytes[4], kCheckpointVersion & 0xff);
  EXPECT_EQ(bytes[5], kCheckpointVersion >> 8);
}

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(1);
  CheckpointFile f{"meta", {{"a", oracle::random_tensor({2, 3, 1, 4}, rng)},
                            {"b", Tensor({1, 1, 1, 1}, -0.0)}}};
  f.tensors[0].value.data()[0] = 5e-324;  // subnormal survives
  const auto bytes = encode_checkpoint(f);
  const CheckpointFile back = decode_checkpoint(bytes);
  EXPECT_EQ(back, f);
  EXPECT_TRUE(std::signbit(back.tensors[1].value.data()[0]));
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, RejectsDamage) {
  auto bytes = encode_checkpoint({"m", {{"t", Tensor({1, 1, 2, 2}, 1.0)}}});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), Error);
  auto bad_version = bytes;
  bad_version[4] = 9;
  try {
    decode_checkpoint(bad_version);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_checkpoint(truncated), Error);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), Error);
}

TEST(Checkpoint, ModelRoundTripPreservesEverything) {
  ScratchDir dir;
  const Model m = trained_looking_model();
  save_checkpoint(model_checkpoint(m), dir.path() / "m.ninc");
  const Model back = model_from_checkpoint(load_checkpoint(dir.path() / "m.ninc"));
  EXPECT_EQ(back.mean, m.mean);
  EXPECT_EQ(back.arch.n_inception, 1);
  EXPECT_EQ(back.arch.width, 8);
  for (std::size_t i = 0; i < m.params.groups().size(); ++i) {
    EXPECT_EQ(back.params.groups()[i].conv.kernel, m.params.groups()[i].conv.kernel);
    EXPECT_EQ(back.params.groups()[i].conv.bias, m.params.groups()[i].conv.bias);
  }
  Image img(61, 50, 3);
  for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = static_cast<std::uint8_t>(i * 37);
  EXPECT_EQ(infer(back, img), infer(m, img));
  EXPECT_EQ(predict(back, img), predict(m, img));
}

TEST(Checkpoint, ImportChecksNamesAndShapes) {
  Model m = trained_looking_model();
  auto tensors = export_parameters(m.params);
  ASSERT_EQ(tensors[0].name, "conv1.weight");
  ASSERT_EQ(tensors[1].name, "conv1.bias");
  auto missing = tensors;
  missing.pop_back();
  EXPECT_THROW(import_parameters(m.params, missing), Error);
  auto reshaped = tensors;
  reshaped[0].value = Tensor({1, 1, 1, 1});
  EXPECT_THROW(import_parameters(m.params, reshaped), Error);

  CheckpointFile f = model_checkpoint(m);
  f.metadata = "task=skin\n";
  EXPECT_THROW(model_from_checkpoint(f), Error);
}

TEST(Inference, OutputsPerTask) {
  Model seg = make_model(ArchitectureSpec::for_task(Task::segmentation, 1, VariantTag::with_7x7, 8, 3),
                         InitKind::zeros);
  // All-zero weights: every class ties, so the lowest index wins.
  const Image labels = infer(seg, Image(9, 7, 3, 40));
  EXPECT_EQ(labels.width, 9);
  for (auto v : labels.samples) EXPECT_EQ(v, 0);
  seg.params.at("conv3").conv.bias = {0.0, 1.0, 1.0};
  for (auto v : infer(seg, Image(9, 7, 3, 40)).samples) EXPECT_EQ(v, 1);

  const Model skin = make_model(ArchitectureSpec::for_task(Task::skin, 1, VariantTag::with_7x7, 8),
                                InitKind::fan_in_uniform, 1);
  const Image prob = infer(skin, Image(130, 77, 3, 90));
  EXPECT_EQ(prob.width, 130);
  EXPECT_EQ(prob.height, 77);
  EXPECT_THROW(infer(skin, Image(60, 60, 1)), Error);

  Model rest = make_model(ArchitectureSpec::for_task(Task::restoration, 1, VariantTag::with_7x7, 8),
                          InitKind::zeros);
  rest.mean = {0.5};
  EXPECT_EQ(infer(rest, Image(20, 20, 1, 77)), Image(20, 20, 1, 128));
}
