#include "ninconv/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "ninconv/error.hpp"
#include "ninconv/rng.hpp"

namespace ninconv {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
}

namespace {

void adam_update(std::span<double> theta, std::span<const double> grad,
                 std::vector<double>& m, std::vector<double>& v, double decay,
                 double lr_t, const TrainConfig& cfg, double v_correction) {
  if (m.size() != theta.size()) {
    m.assign(theta.size(), 0.0);
    v.assign(theta.size(), 0.0);
  }
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i] + decay * theta[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double v_hat = v[i] / v_correction;
    theta[i] -= lr_t * m[i] / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

}  // namespace

AdamReport adam_step(ParameterStore& params, AdamState& state,
                     const TrainConfig& cfg) {
  auto& groups = params.groups();
  state.m.resize(2 * groups.size());
  state.v.resize(2 * groups.size());
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double m_correction = 1.0 - std::pow(cfg.adam_beta1, t);
  const double v_correction = 1.0 - std::pow(cfg.adam_beta2, t);
  // lr * m_hat = (lr / m_correction) * m
  const double lr_t = cfg.learning_rate / m_correction;

  AdamReport report{state.t, true};
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ParamGroup& g = groups[i];
    auto all_zero = [](std::span<const double> s) {
      return std::all_of(s.begin(), s.end(), [](double x) { return x == 0.0; });
    };
    if (!all_zero(g.grad_kernel.data()) || !all_zero(g.grad_bias)) {
      report.stale_gradients = false;
    }
    adam_update(g.conv.kernel.data(), g.grad_kernel.data(), state.m[2 * i],
                state.v[2 * i], cfg.weight_decay, lr_t, cfg, v_correction);
    adam_update(g.conv.bias, g.grad_bias, state.m[2 * i + 1], state.v[2 * i + 1],
                cfg.decay_biases ? cfg.weight_decay : 0.0, lr_t, cfg, v_correction);
  }
  return report;
}

namespace {

Tensor stack(std::span<const SamplePair> samples, std::span<const std::size_t> indices,
             bool targets) {
  if (indices.empty()) throw Error("cannot stack an empty batch");
  auto pick = [&](std::size_t i) -> const Tensor& {
    return targets ? samples[i].target : samples[i].input;
  };
  const Shape first = pick(indices[0]).shape();
  Tensor out(Shape{static_cast<int>(indices.size()), first.c, first.h, first.w});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Tensor& t = pick(indices[b]);
    const Shape& s = t.shape();
    if (s.n != 1 || s.c != first.c || s.h != first.h || s.w != first.w) {
      throw Error(fmt::format("sample '{}' has shape {}, batch expects {}",
                              samples[indices[b]].source, s.str(), first.str()));
    }
    std::copy(t.data().begin(), t.data().end(), out.sample(static_cast<int>(b)).begin());
  }
  return out;
}

}  // namespace

Tensor stack_inputs(std::span<const SamplePair> samples, std::span<const std::size_t> indices) {
  return stack(samples, indices, false);
}

Tensor stack_targets(std::span<const SamplePair> samples, std::span<const std::size_t> indices) {
  return stack(samples, indices, true);
}

LabelMap to_label_map(const Tensor& class_indices) {
  const Shape& s = class_indices.shape();
  if (s.c != 1) throw Error("label maps have a single channel");
  LabelMap m{s.n, s.h, s.w, {}};
  m.labels.reserve(class_indices.size());
  for (double v : class_indices.data()) m.labels.push_back(static_cast<int>(std::lround(v)));
  return m;
}

LossResult batch_loss(const Tensor& output, const Tensor& target, const TrainConfig& cfg) {
  if (cfg.loss_kind == LossKind::euclidean) {
    return euclidean_loss(output, target, cfg.loss_normalization);
  }
  return softmax_cross_entropy(output, to_label_map(target), cfg.ignore_index);
}

std::vector<StepLog> train(const NetworkSpec& net, ParameterStore& params,
                           std::span<const SamplePair> samples, const TrainConfig& cfg,
                           const std::function<void(const StepLog&)>& on_step) {
  cfg.validate();
  if (samples.empty()) throw Error("train: no samples");
  Rng rng(cfg.seed);
  AdamState state;
  std::vector<std::size_t> order(samples.size());
  std::size_t cursor = order.size();
  std::vector<StepLog> log;
  log.reserve(static_cast<std::size_t>(cfg.max_steps));
  const auto start = std::chrono::steady_clock::now();

  for (int step = 1; step <= cfg.max_steps; ++step) {
    if (cursor >= order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t end =
        std::min(order.size(), cursor + static_cast<std::size_t>(cfg.batch_size));
    std::span<const std::size_t> batch(order.data() + cursor, end - cursor);
    cursor = end;

    params.zero_grads();
    const Tensor input = stack_inputs(samples, batch);
    const Tensor target = stack_targets(samples, batch);
    ForwardResult fr = forward(net, params, input, true);
    LossResult lr;
    try {
      lr = batch_loss(fr.output, target, cfg);
    } catch (const Error& e) {
      throw Error(fmt::format("training aborted at step {}: {}", step, e.what()));
    }
    backward(net, params, fr.tape, lr.grad);
    adam_step(params, state, cfg);

    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    log.push_back({step, lr.loss, elapsed.count()});
    if (on_step) on_step(log.back());
  }
  return log;
}

}  // namespace ninconv
