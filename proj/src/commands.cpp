#include "ninconv/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fmt/format.h>
#include <ostream>

#include "ninconv/error.hpp"
#include "ninconv/model.hpp"
#include "ninconv/rng.hpp"

namespace ninconv {
namespace fs = std::filesystem;

namespace {

void save_model(const Model& model, const fs::path& path) {
  // Write next to the target and rename, so an interrupted run never leaves
  // a truncated checkpoint behind.
  const fs::path tmp = path.string() + ".tmp";
  save_checkpoint(model_checkpoint(model), tmp);
  fs::rename(tmp, path);
}

Model load_model(const fs::path& path) { return model_from_checkpoint(load_checkpoint(path)); }

std::vector<ManifestEntry> nonempty_manifest(const fs::path& path) {
  auto entries = read_manifest(path);
  if (entries.empty()) throw Error(fmt::format("manifest '{}' has no entries", path.string()));
  return entries;
}

}  // namespace

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.train_manifest) throw ConfigError("train_manifest is required for train");
  const ArchitectureSpec arch = cfg.architecture();
  const TrainConfig tc = cfg.train_config();

  std::vector<SamplePair> samples;
  for (const ManifestEntry& e : nonempty_manifest(*cfg.train_manifest)) {
    auto s = task_samples(cfg.task, load_netpbm(e.input), load_netpbm(e.label),
                          cfg.patch_stride, e.input.filename().string());
    std::move(s.begin(), s.end(), std::back_inserter(samples));
  }

  Model model = make_model(arch, cfg.init, cfg.seed);
  model.mean = center_samples(cfg.task, samples);

  fs::create_directories(cfg.output_dir);
  TrainSummary summary{cfg.output_dir / "checkpoint.ninc", {}, samples.size()};
  out << fmt::format("training {} net: {} conv layers, {} samples, {} steps\n",
                     to_string(cfg.task), arch.depth_layers(), samples.size(), tc.max_steps);

  const int report_every = std::max(1, tc.max_steps / 20);
  summary.log = train(model.net, model.params, samples, tc, [&](const StepLog& s) {
    if (s.step % report_every == 0) {
      out << fmt::format("step {:6d}  loss {:.6g}  {:.1f} ms\n", s.step, s.loss, s.elapsed_ms);
    }
    if (cfg.checkpoint_every > 0 && s.step % cfg.checkpoint_every == 0) {
      save_model(model, summary.checkpoint);
    }
  });
  save_model(model, summary.checkpoint);

  // elapsed_ms is the only column that varies between identical runs.
  std::string log = "step,loss,elapsed_ms\n";
  for (const StepLog& s : summary.log) {
    log += fmt::format("{},{:.17g},{:.3f}\n", s.step, s.loss, s.elapsed_ms);
  }
  write_text(cfg.output_dir / "train_log.csv", log);
  write_text(cfg.output_dir / "artifacts.txt", "checkpoint.ninc\ntrain_log.csv\n");
  return summary;
}

void cmd_infer(const fs::path& checkpoint, const fs::path& input, const fs::path& output) {
  const Model model = load_model(checkpoint);
  save_netpbm(infer(model, load_netpbm(input)), output);
}

MetricReport cmd_eval(const fs::path& checkpoint, const fs::path& manifest,
                      const fs::path& output_dir) {
  const Model model = load_model(checkpoint);
  const auto entries = nonempty_manifest(manifest);
  MetricReport report;
  report.task = std::string(to_string(model.arch.task));
  fs::create_directories(output_dir);

  switch (model.arch.task) {
    case Task::skin: {
      std::vector<double> scores;
      std::vector<std::uint8_t> truth;
      for (const ManifestEntry& e : entries) {
        const Image img = load_netpbm(e.input);
        const Image label = load_netpbm(e.label);
        if (label.width != img.width || label.height != img.height || label.channels != 1) {
          throw Error(fmt::format("{}: label must be a gray image of the input's size",
                                  e.label.string()));
        }
        const Image prob = infer(model, img);
        for (std::size_t i = 0; i < prob.samples.size(); ++i) {
          scores.push_back(prob.samples[i] / 255.0);
          truth.push_back(label.samples[i] >= 128 ? 1 : 0);
        }
      }
      const SweepResult sweep = sweep_curves(scores, truth);
      const BinaryMetrics m = binary_metrics(scores, truth, sweep.peak_threshold);
      report.add("skin", "auc_roc", sweep.auc_roc);
      report.add("skin", "peak_threshold", sweep.peak_threshold);
      report.add("skin", "f_measure", m.f_measure);
      report.add("skin", "precision", m.precision);
      report.add("skin", "recall", m.recall);
      report.add("skin", "accuracy", m.accuracy);
      report.curves = {sweep.pr, sweep.roc};
      write_text(output_dir / "pr.csv", curve_csv(sweep.pr));
      write_text(output_dir / "roc.csv", curve_csv(sweep.roc));
      break;
    }
    case Task::segmentation: {
      std::vector<int> pred, truth;
      const int classes = model.arch.output_channels;
      for (const ManifestEntry& e : entries) {
        const Image img = load_netpbm(e.input);
        const Image label = load_netpbm(e.label);
        if (label.width != img.width || label.height != img.height || label.channels != 1) {
          throw Error(fmt::format("{}: label must be a gray image of the input's size",
                                  e.label.string()));
        }
        const Image p = infer(model, img);
        for (std::size_t i = 0; i < p.samples.size(); ++i) {
          const int t = label.samples[i];
          if (t >= classes) continue;  // void / ignore pixels
          pred.push_back(p.samples[i]);
          truth.push_back(t);
        }
      }
      const SegmentationScores s = segmentation_metrics(pred, truth, classes);
      report.add("segmentation", "accuracy", s.accuracy);
      report.add("segmentation", "class_mean", s.class_mean);
      report.add("segmentation", "mean_iou", s.mean_iou);
      break;
    }
    case Task::restoration: {
      double psnr_in = 0, psnr_out = 0, ssim_in = 0, ssim_out = 0;
      for (const ManifestEntry& e : entries) {
        const Image degraded = load_netpbm(e.input);
        const Image clean = load_netpbm(e.label);
        const Image restored = infer(model, degraded);
        psnr_in += psnr(clean, degraded);
        psnr_out += psnr(clean, restored);
        ssim_in += ssim(clean, degraded);
        ssim_out += ssim(clean, restored);
      }
      const double n = static_cast<double>(entries.size());
      report.add("degraded", "psnr", psnr_in / n);
      report.add("restored", "psnr", psnr_out / n);
      report.add("degraded", "ssim", ssim_in / n);
      report.add("restored", "ssim", ssim_out / n);
      break;
    }
  }
  write_text(output_dir / "report.csv", report_csv(report));
  write_text(output_dir / "artifacts.txt",
             model.arch.task == Task::skin ? "report.csv\npr.csv\nroc.csv\n" : "report.csv\n");
  return report;
}

std::string cmd_analyze(const RunConfig& cfg) { return architecture_table(cfg.architecture()); }

DegradeSummary cmd_degrade(const fs::path& input_dir, int quality, const fs::path& output_dir,
                           std::ostream& err) {
  if (quality < 1 || quality > 100) {
    throw ConfigError(fmt::format("quality must be in 1..100, got {}", quality));
  }
  if (!fs::is_directory(input_dir)) {
    throw Error(fmt::format("'{}' is not a directory", input_dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  if (files.empty()) throw Error(fmt::format("no .pgm files in '{}'", input_dir.string()));
  std::sort(files.begin(), files.end());

  fs::create_directories(output_dir);
  DegradeSummary summary;
  std::vector<ManifestEntry> entries;
  for (const fs::path& f : files) {
    try {
      const Image clean = load_netpbm(f);
      if (clean.channels != 1) throw Error("expected a grayscale image");
      save_netpbm(dct_degrade(clean, quality), output_dir / f.filename());
      entries.push_back({f.filename(), fs::absolute(f)});
      ++summary.written;
    } catch (const std::exception& e) {
      summary.failures.push_back(fmt::format("{}: {}", f.string(), e.what()));
      err << summary.failures.back() << '\n';
    }
  }
  write_manifest(output_dir / "manifest.tsv", entries);
  return summary;
}

GradcheckSummary cmd_gradcheck(const RunConfig& cfg, bool corrupt_backward) {
  GradientCheckOptions opts;
  opts.seed = cfg.seed;
  opts.backward.flip_parameter_gradients = corrupt_backward;

  auto run = [&](Task task, LossKind kind) {
    const ArchitectureSpec arch = ArchitectureSpec::for_task(task, 1, cfg.variant, 8, 2);
    BuiltNetwork b = build_network(arch, InitKind::fan_in_uniform, cfg.seed);
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    // Zero biases put pre-activations exactly on the ReLU kink wherever all
    // upstream channels are dead, where central differences see half a slope.
    for (ParamGroup& g : b.params.groups()) {
      for (double& v : g.conv.bias) v = rng.uniform(-0.1, 0.1);
    }
    Tensor x(Shape{2, arch.input_channels, 7, 7});
    for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
    return gradient_check(b.net, b.params, x, kind, opts);
  };
  return {run(Task::skin, LossKind::euclidean), run(Task::segmentation, LossKind::softmax)};
}

namespace {

void print_gradcheck(const char* label, const GradientCheckReport& r, std::ostream& out) {
  out << fmt::format("{} loss\n", label);
  for (const auto& e : r.entries) {
    out << fmt::format("  {:<28} {:>6} checked  max rel err {:.3e}\n", e.name, e.checked,
                       e.max_relative_error);
  }
  out << fmt::format("  max relative error {:.3e} (threshold {:.0e}): {}\n",
                     r.max_relative_error, r.threshold, r.passed ? "pass" : "FAIL");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pooling-free inception networks for dense image prediction", "ninconv"};
  app.require_subcommand(1);

  std::string config, checkpoint, input, output;
  int quality = 10;
  std::optional<std::uint64_t> seed;
  bool corrupt = false;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "Override the config seed"); };

  auto* train_cmd = app.add_subcommand("train", "Train a network from a run config");
  train_cmd->add_option("--config", config, "Run config")->required();
  add_seed(train_cmd);

  auto* infer_cmd = app.add_subcommand("infer", "Run a checkpoint on one image");
  infer_cmd->add_option("--checkpoint", checkpoint)->required();
  infer_cmd->add_option("--input", input, "Input PGM/PPM")->required();
  infer_cmd->add_option("--output", output, "Output PGM")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--input", input, "Manifest of input/label pairs")->required();
  eval_cmd->add_option("--output", output, "Directory for metric CSVs")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "Print the architecture table");
  analyze_cmd->add_option("--config", config, "Run config (defaults when omitted)");

  auto* degrade_cmd = app.add_subcommand("degrade", "JPEG-style degradation of a directory");
  degrade_cmd->add_option("--input", input, "Directory of clean PGMs")->required();
  degrade_cmd->add_option("--output", output, "Output directory")->required();
  degrade_cmd->add_option("--quality", quality, "Quality factor 1..100");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of backward");
  grad_cmd->add_option("--config", config, "Run config (defaults when omitted)");
  add_seed(grad_cmd);
  grad_cmd->add_flag("--corrupt-backward", corrupt, "Flip parameter gradients (debug)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  auto load_config = [&]() {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    if (seed) cfg.seed = *seed;
    return cfg;
  };

  try {
    if (*train_cmd) {
      const auto s = cmd_train(load_config(), out);
      out << fmt::format("final loss {:.6g}, checkpoint {}\n",
                         s.log.empty() ? 0.0 : s.log.back().loss, s.checkpoint.string());
    } else if (*infer_cmd) {
      cmd_infer(checkpoint, input, output);
    } else if (*eval_cmd) {
      out << report_csv(cmd_eval(checkpoint, input, output));
    } else if (*analyze_cmd) {
      out << cmd_analyze(load_config());
    } else if (*degrade_cmd) {
      const auto s = cmd_degrade(input, quality, output, err);
      out << fmt::format("degraded {} file(s) at Q={}, {} failed\n", s.written, quality,
                         s.failures.size());
      if (!s.failures.empty()) return kExitFailure;
    } else if (*grad_cmd) {
      const auto s = cmd_gradcheck(load_config(), corrupt);
      print_gradcheck("euclidean", s.euclidean, out);
      print_gradcheck("softmax", s.softmax, out);
      return s.passed() ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace ninconv
