#include "ninconv/config.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "ninconv/error.hpp"

namespace ninconv {

ArchitectureSpec RunConfig::architecture() const {
  ArchitectureSpec a = ArchitectureSpec::for_task(task, n_inception, variant, width, classes);
  a.validate();
  return a;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.learning_rate = lr;
  c.weight_decay = weight_decay;
  c.batch_size = batch_size;
  c.max_steps = max_steps;
  c.seed = seed;
  c.loss_kind = task == Task::segmentation ? LossKind::softmax : LossKind::euclidean;
  c.loss_normalization = loss_normalization;
  c.decay_biases = decay_biases;
  c.validate();
  return c;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& value, const std::string& where) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", where, value));
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", where, value));
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           std::string_view origin) {
  RunConfig cfg;
  std::optional<int> depth;
  int depth_line = 0, n_inception_line = 0;
  bool n_inception_set = false;
  std::set<std::string> seen;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string where = fmt::format("{}:{}", origin, number);
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}: expected 'key = value'", where));
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError(fmt::format("{}: duplicate key '{}'", where, key));
    }
    try {
      if (key == "task") cfg.task = parse_task(value);
      else if (key == "variant") cfg.variant = parse_variant(value);
      else if (key == "n_inception") {
        cfg.n_inception = parse_number<int>(value, where);
        n_inception_set = true;
        n_inception_line = number;
      } else if (key == "depth") {
        depth = parse_number<int>(value, where);
        n_inception_for_depth(*depth);
        depth_line = number;
      }
      else if (key == "width") cfg.width = parse_number<int>(value, where);
      else if (key == "classes") cfg.classes = parse_number<int>(value, where);
      else if (key == "lr") cfg.lr = parse_number<double>(value, where);
      else if (key == "weight_decay") cfg.weight_decay = parse_number<double>(value, where);
      else if (key == "batch_size") cfg.batch_size = parse_number<int>(value, where);
      else if (key == "max_steps") cfg.max_steps = parse_number<int>(value, where);
      else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, where);
      else if (key == "init") cfg.init = parse_init(value);
      else if (key == "loss_normalization") {
        if (value == "per_pixel") cfg.loss_normalization = LossNormalization::per_pixel;
        else if (value == "per_image") cfg.loss_normalization = LossNormalization::per_image;
        else throw ConfigError(fmt::format("unknown loss_normalization '{}'", value));
      } else if (key == "decay_biases") cfg.decay_biases = parse_bool(value, where);
      else if (key == "patch_stride") cfg.patch_stride = parse_number<int>(value, where);
      else if (key == "checkpoint_every") cfg.checkpoint_every = parse_number<int>(value, where);
      else if (key == "train_manifest") cfg.train_manifest = path_of(value);
      else if (key == "eval_manifest") cfg.eval_manifest = path_of(value);
      else if (key == "output_dir") cfg.output_dir = path_of(value);
      else throw ConfigError(fmt::format("unknown key '{}'", key));
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.starts_with(where)) throw;
      throw ConfigError(fmt::format("{}: {}", where, msg));
    }
  }

  if (depth) {
    const int n = n_inception_for_depth(*depth);
    if (n_inception_set && n != cfg.n_inception) {
      throw ConfigError(fmt::format("{}: depth {} implies {} inception modules, n_inception is {}",
                                    fmt::format("{}:{}", origin, std::max(depth_line, n_inception_line)), *depth, n,
                                    cfg.n_inception));
    }
    cfg.n_inception = n;
  }
  if (cfg.patch_stride < 1) throw ConfigError(fmt::format("{}: patch_stride must be >= 1", origin));
  if (cfg.checkpoint_every < 0) {
    throw ConfigError(fmt::format("{}: checkpoint_every must be >= 0", origin));
  }
  cfg.architecture();
  cfg.train_config();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path(), path.string());
}

}  // namespace ninconv
