#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ninconv/loss.hpp"
#include "ninconv/netgraph.hpp"
#include "ninconv/pipeline.hpp"

namespace ninconv {

struct TrainConfig {
  double learning_rate = 0.001;
  double weight_decay = 0.0002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  int max_steps = 1000;
  std::uint64_t seed = 1;
  LossKind loss_kind = LossKind::euclidean;
  LossNormalization loss_normalization = LossNormalization::per_pixel;
  bool decay_biases = false;
  std::optional<int> ignore_index = 255;  // segmentation only

  void validate() const;
};

// First/second moments for every kernel and bias buffer, in store order.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long t = 0;
};

struct AdamReport {
  long step = 0;
  bool stale_gradients = false;  // every gradient was exactly zero
};

// Adam with weight decay folded into the gradient as an L2 term.
AdamReport adam_step(ParameterStore& params, AdamState& state,
                     const TrainConfig& cfg);

struct StepLog {
  int step = 0;
  double loss = 0.0;
  double elapsed_ms = 0.0;
};

// Stacks samples[i] for i in `indices` into one batch.
Tensor stack_inputs(std::span<const SamplePair> samples, std::span<const std::size_t> indices);
Tensor stack_targets(std::span<const SamplePair> samples, std::span<const std::size_t> indices);
LabelMap to_label_map(const Tensor& class_indices);

// One loss evaluation + gradient for a batch, dispatched on cfg.loss_kind.
LossResult batch_loss(const Tensor& output, const Tensor& target, const TrainConfig& cfg);

// zero_grads -> forward -> loss -> backward -> adam_step, max_steps times.
// Batches are drawn from a per-epoch shuffle seeded by cfg.seed; the last
// partial batch of an epoch is kept.
std::vector<StepLog> train(const NetworkSpec& net, ParameterStore& params,
                           std::span<const SamplePair> samples, const TrainConfig& cfg,
                           const std::function<void(const StepLog&)>& on_step = {});

}  // namespace ninconv
