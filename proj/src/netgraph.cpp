#include "ninconv/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>

#include "ninconv/error.hpp"
#include "ninconv/rng.hpp"

namespace ninconv {

LayerSpec LayerSpec::conv(std::string name, int in, int out, int k) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.name = std::move(name);
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = k;
  return l;
}

LayerSpec LayerSpec::relu(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::relu;
  l.name = std::move(name);
  return l;
}

LayerSpec LayerSpec::maxpool(std::string name, int window, int stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.name = std::move(name);
  l.kernel = window;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::branch_group(std::string name,
                                  std::vector<std::vector<LayerSpec>> branches) {
  LayerSpec l;
  l.kind = LayerKind::branch_group;
  l.name = std::move(name);
  l.branches = std::move(branches);
  return l;
}

namespace {

int validate_sequence(const std::vector<LayerSpec>& layers, int channels,
                      std::set<std::string>& names) {
  for (const LayerSpec& l : layers) {
    if (l.name.empty()) throw Error("layer without a name");
    if (!names.insert(l.name).second) {
      throw Error(fmt::format("duplicate layer name '{}'", l.name));
    }
    switch (l.kind) {
      case LayerKind::conv:
        if (l.in_channels != channels) {
          throw Error(fmt::format("layer '{}' expects {} channels, receives {}",
                                  l.name, l.in_channels, channels));
        }
        if (l.out_channels < 1 || l.kernel < 1 || l.kernel % 2 == 0) {
          throw Error(fmt::format("layer '{}': bad convolution {}x{} -> {}",
                                  l.name, l.kernel, l.kernel, l.out_channels));
        }
        channels = l.out_channels;
        break;
      case LayerKind::relu:
      case LayerKind::maxpool:
        break;
      case LayerKind::branch_group: {
        if (l.branches.empty()) {
          throw Error(fmt::format("branch group '{}' has no branches", l.name));
        }
        int total = 0;
        for (const auto& branch : l.branches) {
          total += validate_sequence(branch, channels, names);
        }
        channels = total;
        break;
      }
    }
  }
  return channels;
}

int sequence_depth(const std::vector<LayerSpec>& layers) {
  int depth = 0;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::conv) {
      ++depth;
    } else if (l.kind == LayerKind::branch_group) {
      int deepest = 0;
      for (const auto& b : l.branches) deepest = std::max(deepest, sequence_depth(b));
      depth += deepest;
    }
  }
  return depth;
}

void add_sequence_params(const std::vector<LayerSpec>& layers,
                         ParameterStore& store) {
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::conv) {
      store.add(l.name, l.out_channels, l.in_channels, l.kernel);
    } else if (l.kind == LayerKind::branch_group) {
      for (const auto& b : l.branches) add_sequence_params(b, store);
    }
  }
}

Tensor run_sequence(const std::vector<LayerSpec>& layers,
                    const ParameterStore& params, Tensor x, bool record,
                    Tape& tape) {
  tape.input_shape = x.shape();
  for (const LayerSpec& l : layers) {
    Tape::Record rec;
    Tensor y;
    try {
      switch (l.kind) {
        case LayerKind::conv:
          y = conv2d_forward(x, params.at(l.name).conv);
          break;
        case LayerKind::relu:
          y = relu_forward(x);
          break;
        case LayerKind::maxpool: {
          PoolResult pool = maxpool2d(x, l.kernel, l.stride, true);
          y = std::move(pool.output);
          rec.argmax = std::move(pool.argmax);
          break;
        }
        case LayerKind::branch_group: {
          std::vector<Tensor> outs;
          outs.reserve(l.branches.size());
          rec.branches.resize(l.branches.size());
          for (std::size_t b = 0; b < l.branches.size(); ++b) {
            outs.push_back(run_sequence(l.branches[b], params, x, record,
                                        rec.branches[b]));
          }
          y = channel_concat(outs);
          break;
        }
      }
    } catch (const Error& e) {
      throw Error(fmt::format("layer '{}': {}", l.name, e.what()));
    }
    if (record) {
      rec.input = std::move(x);
      tape.records.push_back(std::move(rec));
    }
    x = std::move(y);
  }
  tape.output_shape = x.shape();
  return x;
}

void scale(std::span<double> v, double factor) {
  for (double& x : v) x *= factor;
}

Tensor backprop_sequence(const std::vector<LayerSpec>& layers,
                         ParameterStore& params, const Tape& tape, Tensor grad,
                         const BackwardOptions& options) {
  if (tape.records.size() != layers.size()) {
    throw Error("backward: tape does not match the network (was record set?)");
  }
  if (!(grad.shape() == tape.output_shape)) {
    throw Error(fmt::format("backward: gradient {} vs recorded output {}",
                            grad.shape().str(), tape.output_shape.str()));
  }
  for (std::size_t i = layers.size(); i-- > 0;) {
    const LayerSpec& l = layers[i];
    const Tape::Record& rec = tape.records[i];
    switch (l.kind) {
      case LayerKind::conv: {
        ParamGroup& group = params.at(l.name);
        ConvGrads g = conv2d_backward(rec.input, group.conv, grad);
        if (options.flip_parameter_gradients) {
          scale(g.kernel.data(), -1.0);
          scale(g.bias, -1.0);
        }
        auto gk = group.grad_kernel.data();
        auto src = g.kernel.data();
        for (std::size_t j = 0; j < gk.size(); ++j) gk[j] += src[j];
        for (std::size_t j = 0; j < g.bias.size(); ++j) group.grad_bias[j] += g.bias[j];
        grad = std::move(g.input);
        break;
      }
      case LayerKind::relu:
        grad = relu_backward(rec.input, grad);
        break;
      case LayerKind::maxpool:
        grad = maxpool2d_backward(rec.input.shape(), rec.argmax, grad);
        break;
      case LayerKind::branch_group: {
        Tensor total(rec.input.shape());
        int offset = 0;
        for (std::size_t b = 0; b < l.branches.size(); ++b) {
          const int width = rec.branches[b].output_shape.c;
          Tensor part = backprop_sequence(l.branches[b], params, rec.branches[b],
                                          channel_slice(grad, offset, width),
                                          options);
          offset += width;
          auto dst = total.data();
          auto src = part.data();
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
        grad = std::move(total);
        break;
      }
    }
  }
  return grad;
}

void count_sequence(const std::vector<LayerSpec>& layers, ParameterCount& count) {
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::conv) {
      ParameterCount::Layer c{l.name,
                              static_cast<std::size_t>(l.out_channels) *
                                  l.in_channels * l.kernel * l.kernel,
                              static_cast<std::size_t>(l.out_channels)};
      count.kernel_only += c.kernel;
      count.total += c.kernel + c.bias;
      count.layers.push_back(std::move(c));
    } else if (l.kind == LayerKind::branch_group) {
      for (const auto& b : l.branches) count_sequence(b, count);
    }
  }
}

}  // namespace

int NetworkSpec::validate() const {
  if (input_channels < 1) throw Error("network needs at least one input channel");
  std::set<std::string> names;
  return validate_sequence(layers, input_channels, names);
}

int NetworkSpec::conv_depth() const { return sequence_depth(layers); }

ParamGroup& ParameterStore::add(const std::string& name, int out, int in, int k) {
  if (index_.contains(name)) {
    throw Error(fmt::format("parameter group '{}' already exists", name));
  }
  ParamGroup g;
  g.name = name;
  g.conv = ConvParams::same(out, in, k);
  g.grad_kernel = Tensor(g.conv.kernel.shape());
  g.grad_bias.assign(g.conv.bias.size(), 0.0);
  index_.emplace(name, groups_.size());
  groups_.push_back(std::move(g));
  return groups_.back();
}

ParamGroup& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(fmt::format("no parameters for '{}'", name));
  return groups_[it->second];
}

const ParamGroup& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(fmt::format("no parameters for '{}'", name));
  return groups_[it->second];
}

void ParameterStore::zero_grads() {
  for (ParamGroup& g : groups_) {
    g.grad_kernel.fill(0.0);
    std::fill(g.grad_bias.begin(), g.grad_bias.end(), 0.0);
  }
}

std::size_t ParameterStore::total_count() const {
  std::size_t total = 0;
  for (const ParamGroup& g : groups_) total += g.count();
  return total;
}

ParameterStore make_parameters(const NetworkSpec& net) {
  net.validate();
  ParameterStore store;
  add_sequence_params(net.layers, store);
  return store;
}

ForwardResult forward(const NetworkSpec& net, const ParameterStore& params,
                      const Tensor& input, bool record) {
  if (input.shape().c != net.input_channels) {
    throw Error(fmt::format("forward: input has {} channels, network expects {}",
                            input.shape().c, net.input_channels));
  }
  ForwardResult r;
  r.output = run_sequence(net.layers, params, input, record, r.tape);
  return r;
}

Tensor backward(const NetworkSpec& net, ParameterStore& params,
                const Tape& tape, const Tensor& grad_output,
                const BackwardOptions& options) {
  return backprop_sequence(net.layers, params, tape, grad_output, options);
}

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

GradientCheckReport gradient_check(const NetworkSpec& net,
                                   ParameterStore& params, const Tensor& input,
                                   LossKind loss_kind,
                                   const GradientCheckOptions& options) {
  Rng rng(options.seed);
  const Shape out_shape = forward(net, params, input, false).output.shape();

  // Fixed random target drawn once, so the loss is a deterministic function.
  Tensor target(out_shape);
  LabelMap labels{out_shape.n, out_shape.h, out_shape.w, {}};
  if (loss_kind == LossKind::euclidean) {
    for (double& v : target.storage()) v = rng.uniform(-1.0, 1.0);
  } else {
    labels.labels.resize(static_cast<std::size_t>(out_shape.n) * out_shape.plane());
    for (int& v : labels.labels) {
      v = static_cast<int>(rng.below(static_cast<std::uint64_t>(out_shape.c)));
    }
  }
  auto loss_of = [&](const Tensor& out) {
    return loss_kind == LossKind::euclidean
               ? euclidean_loss(out, target, LossNormalization::per_pixel)
               : softmax_cross_entropy(out, labels);
  };

  params.zero_grads();
  ForwardResult fr = forward(net, params, input, true);
  LossResult lr = loss_of(fr.output);
  const Tensor input_grad =
      backward(net, params, fr.tape, lr.grad, options.backward);

  auto evaluate = [&](const Tensor& x) {
    const double l = loss_of(forward(net, params, x, false).output).loss;
    if (!std::isfinite(l)) throw Error("gradient_check: non-finite loss");
    return l;
  };
  const double h = options.step;

  // Coordinates to probe within one buffer: all of them, or a seeded subset.
  auto pick = [&](std::size_t size, std::size_t budget) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    if (size > budget) {
      rng.shuffle(idx);
      idx.resize(budget);
      std::sort(idx.begin(), idx.end());
    }
    return idx;
  };
  const std::size_t total = params.total_count();
  const bool exhaustive = total <= options.exhaustive_limit;

  GradientCheckReport report;
  report.threshold = options.threshold;
  // Subsampling spreads the budget over buffers in proportion to their size.
  auto budget_for = [&](std::size_t size) {
    if (exhaustive) return size;
    return std::max<std::size_t>(1, (options.sample_count * size + total - 1) / total);
  };
  auto check_buffer = [&](const std::string& name, std::span<double> values,
                          std::span<const double> analytic, std::size_t budget,
                          auto&& loss_at) {
    GradientCheckReport::Entry entry{name, 0, 0.0};
    for (std::size_t i : pick(values.size(), budget)) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss_at();
      values[i] = saved - h;
      const double down = loss_at();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      entry.max_relative_error =
          std::max(entry.max_relative_error, relative_error(analytic[i], numeric));
      ++entry.checked;
    }
    report.max_relative_error = std::max(report.max_relative_error,
                                         entry.max_relative_error);
    report.entries.push_back(std::move(entry));
  };

  for (ParamGroup& g : params.groups()) {
    auto loss_at = [&] { return evaluate(input); };
    const Tensor analytic_kernel = g.grad_kernel;
    const std::vector<double> analytic_bias = g.grad_bias;
    check_buffer(g.name + ".weight", g.conv.kernel.data(), analytic_kernel.data(),
                 budget_for(analytic_kernel.size()), loss_at);
    check_buffer(g.name + ".bias", g.conv.bias, analytic_bias,
                 budget_for(analytic_bias.size()), loss_at);
  }
  Tensor probe = input;
  const std::size_t input_budget =
      probe.size() <= options.exhaustive_limit ? probe.size() : options.sample_count;
  check_buffer("input", probe.data(), input_grad.data(), input_budget,
               [&] { return evaluate(probe); });

  report.passed = report.max_relative_error < options.threshold;
  return report;
}

ParameterCount count_parameters(const NetworkSpec& net) {
  ParameterCount count;
  count_sequence(net.layers, count);
  return count;
}

}  // namespace ninconv
