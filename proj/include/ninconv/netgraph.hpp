#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ninconv/loss.hpp"
#include "ninconv/ops.hpp"
#include "ninconv/tensor.hpp"

namespace ninconv {

enum class LayerKind { conv, relu, maxpool, branch_group };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  int in_channels = 0;   // conv
  int out_channels = 0;  // conv
  int kernel = 0;        // conv kernel size or pooling window
  int stride = 1;        // pooling only; convolutions are always stride 1
  // Parallel sub-sequences of a branch group; their outputs are
  // concatenated along channels in this order.
  std::vector<std::vector<LayerSpec>> branches;

  static LayerSpec conv(std::string name, int in, int out, int k);
  static LayerSpec relu(std::string name);
  static LayerSpec maxpool(std::string name, int window, int stride);
  static LayerSpec branch_group(std::string name,
                                std::vector<std::vector<LayerSpec>> branches);
};

struct NetworkSpec {
  int input_channels = 1;
  std::vector<LayerSpec> layers;

  // Checks unique names and channel arithmetic; returns output channels.
  int validate() const;
  int output_channels() const { return validate(); }
  // Number of convolution layers on the longest input-to-output path.
  int conv_depth() const;
};

// One convolution's weights plus gradient buffers.
struct ParamGroup {
  std::string name;
  ConvParams conv;
  Tensor grad_kernel;
  std::vector<double> grad_bias;

  std::size_t count() const { return conv.kernel.size() + conv.bias.size(); }
};

// Named weights for every convolution, kept in network construction order.
class ParameterStore {
 public:
  ParamGroup& add(const std::string& name, int out, int in, int k);
  ParamGroup& at(const std::string& name);
  const ParamGroup& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  void zero_grads();
  std::size_t total_count() const;

 private:
  std::vector<ParamGroup> groups_;
  std::map<std::string, std::size_t> index_;
};

// Zero-initialised parameters for every convolution in `net`.
ParameterStore make_parameters(const NetworkSpec& net);

// Activations kept by a recording forward pass.
struct Tape {
  struct Record {
    Tensor input;
    std::vector<std::size_t> argmax;
    std::vector<Tape> branches;
  };
  Shape input_shape;
  Shape output_shape;
  std::vector<Record> records;
};

struct ForwardResult {
  Tensor output;
  Tape tape;
};

ForwardResult forward(const NetworkSpec& net, const ParameterStore& params,
                      const Tensor& input, bool record);

// Debug switch for validating the gradient checker itself.
struct BackwardOptions {
  bool flip_parameter_gradients = false;
};

// Accumulates parameter gradients into `params` and returns d loss / d input.
Tensor backward(const NetworkSpec& net, ParameterStore& params,
                const Tape& tape, const Tensor& grad_output,
                const BackwardOptions& options = {});

struct GradientCheckOptions {
  double step = 1e-5;
  double threshold = 1e-4;
  // Networks with more parameters than this are checked on a random subset.
  std::size_t exhaustive_limit = 50000;
  std::size_t sample_count = 500;
  std::uint64_t seed = 1234;
  BackwardOptions backward;
};

struct GradientCheckReport {
  struct Entry {
    std::string name;  // "<layer>.weight", "<layer>.bias" or "input"
    std::size_t checked = 0;
    double max_relative_error = 0.0;
  };
  std::vector<Entry> entries;
  double max_relative_error = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

double relative_error(double analytic, double numeric);

// Compares backward() against central differences of a loss built from a
// seeded random target (regression target or class labels).
GradientCheckReport gradient_check(const NetworkSpec& net,
                                   ParameterStore& params, const Tensor& input,
                                   LossKind loss_kind,
                                   const GradientCheckOptions& options = {});

struct ParameterCount {
  struct Layer {
    std::string name;
    std::size_t kernel = 0;
    std::size_t bias = 0;
  };
  std::vector<Layer> layers;
  std::size_t kernel_only = 0;
  std::size_t total = 0;
};

ParameterCount count_parameters(const NetworkSpec& net);

}  // namespace ninconv
