#include "ninconv/model.hpp"

#include <charconv>
#include <fmt/format.h>
#include <map>
#include <sstream>

#include "ninconv/error.hpp"

namespace ninconv {

Model make_model(const ArchitectureSpec& arch, InitKind init, std::uint64_t seed) {
  BuiltNetwork built = build_network(arch, init, seed);
  Model m{arch, std::vector<double>(static_cast<std::size_t>(arch.input_channels), 0.0),
          std::move(built.net), std::move(built.params)};
  return m;
}

std::string encode_model_metadata(const Model& model) {
  const ArchitectureSpec& a = model.arch;
  std::string out;
  out += fmt::format("task={}\n", to_string(a.task));
  out += fmt::format("variant={}\n", to_string(a.variant.tag));
  out += fmt::format("n_inception={}\n", a.n_inception);
  out += fmt::format("width={}\n", a.width);
  out += fmt::format("input_channels={}\n", a.input_channels);
  out += fmt::format("output_channels={}\n", a.output_channels);
  out += "mean=";
  for (std::size_t i = 0; i < model.mean.size(); ++i) {
    out += fmt::format("{}{:.17g}", i ? "," : "", model.mean[i]);
  }
  out += "\n";
  return out;
}

CheckpointFile model_checkpoint(const Model& model) {
  return {encode_model_metadata(model), export_parameters(model.params)};
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(fmt::format("checkpoint metadata: bad integer for {}: '{}'", key, v));
  }
  return out;
}

std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < v.size()) {
    auto end = v.find(',', pos);
    if (end == std::string::npos) end = v.size();
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(v.data() + pos, v.data() + end, d);
    if (ec != std::errc() || ptr != v.data() + end) {
      throw Error(fmt::format("checkpoint metadata: bad mean '{}'", v));
    }
    out.push_back(d);
    pos = end + 1;
  }
  return out;
}

}  // namespace

Model model_from_checkpoint(const CheckpointFile& file) {
  std::map<std::string, std::string> kv;
  std::istringstream in(file.metadata);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(fmt::format("checkpoint metadata: bad line '{}'", line));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(fmt::format("checkpoint metadata lacks '{}'", key));
    return it->second;
  };

  ArchitectureSpec arch;
  try {
    const Task task = parse_task(need("task"));
    const int classes = to_int("output_channels", need("output_channels"));
    arch = ArchitectureSpec::for_task(task, to_int("n_inception", need("n_inception")),
                                      parse_variant(need("variant")),
                                      to_int("width", need("width")), classes);
    const int in_ch = to_int("input_channels", need("input_channels"));
    if (in_ch != arch.input_channels || classes != arch.output_channels) {
      throw Error(fmt::format("checkpoint metadata: channels {}->{} do not fit task {}", in_ch,
                              classes, to_string(task)));
    }
    arch.validate();
  } catch (const ConfigError& e) {
    throw Error(fmt::format("checkpoint metadata: {}", e.what()));
  }

  Model m = make_model(arch, InitKind::zeros);
  m.mean = to_doubles(need("mean"));
  if (m.mean.size() != static_cast<std::size_t>(arch.input_channels)) {
    throw Error(fmt::format("checkpoint metadata: mean has {} entries, expected {}",
                            m.mean.size(), arch.input_channels));
  }
  import_parameters(m.params, file.tensors);
  return m;
}

std::vector<SamplePair> task_samples(Task task, const Image& input, const Image& label,
                                     int patch_stride, const std::string& source) {
  switch (task) {
    case Task::skin:
      return skin_input_windows(input, label, source);
    case Task::segmentation: {
      if (input.width != label.width || input.height != label.height || label.channels != 1) {
        throw Error(fmt::format("{}: label map must be single-channel {}x{}", source,
                                input.width, input.height));
      }
      return {SamplePair{image_to_tensor(input), labels_to_tensor(label), source, 0, 0}};
    }
    case Task::restoration:
      return extract_patches(input, label, kPatchSide, patch_stride, source);
  }
  throw Error("unknown task");
}

std::vector<double> center_samples(Task task, std::vector<SamplePair>& samples) {
  std::vector<Tensor> inputs;
  inputs.reserve(samples.size());
  for (const SamplePair& s : samples) inputs.push_back(s.input);
  const std::vector<double> mean = channel_mean(inputs);
  for (SamplePair& s : samples) {
    s.input = mean_subtract(s.input, mean);
    if (task == Task::restoration) s.target = mean_subtract(s.target, mean);
  }
  return mean;
}

Tensor predict(const Model& model, const Image& image) {
  if (image.channels != model.arch.input_channels) {
    throw Error(fmt::format("image has {} channels, the {} model expects {}", image.channels,
                            to_string(model.arch.task), model.arch.input_channels));
  }
  const Tensor x = model.arch.task == Task::skin ? inference_decimate(image)
                                                 : image_to_tensor(image);
  return forward(model.net, model.params, mean_subtract(x, model.mean), false).output;
}

Image infer(const Model& model, const Image& image) {
  const Tensor y = predict(model, image);
  switch (model.arch.task) {
    case Task::skin:
      return restore_output(y, image.height, image.width);
    case Task::segmentation: {
      const Shape s = y.shape();
      if (s.c > 256) throw Error("more than 256 classes cannot be written as an 8-bit map");
      Image out(s.w, s.h, 1);
      for (int yy = 0; yy < s.h; ++yy) {
        for (int xx = 0; xx < s.w; ++xx) {
          int best = 0;
          for (int c = 1; c < s.c; ++c) {
            if (y.at(0, c, yy, xx) > y.at(0, best, yy, xx)) best = c;
          }
          out.at(yy, xx) = static_cast<std::uint8_t>(best);
        }
      }
      return out;
    }
    case Task::restoration:
      return tensor_to_image(mean_add(y, model.mean));
  }
  throw Error("unknown task");
}

}  // namespace ninconv
