#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ninconv/config.hpp"
#include "ninconv/metrics.hpp"
#include "ninconv/netgraph.hpp"

namespace ninconv {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::vector<StepLog> log;
  std::size_t samples = 0;
};

// Writes checkpoint.ninc (every checkpoint_every steps and at the end),
// train_log.csv and artifacts.txt under cfg.output_dir.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& out);

void cmd_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
               const std::filesystem::path& output);

// Writes report.csv (plus pr.csv and roc.csv for skin) and artifacts.txt
// under `output_dir`.
MetricReport cmd_eval(const std::filesystem::path& checkpoint,
                      const std::filesystem::path& manifest,
                      const std::filesystem::path& output_dir);

std::string cmd_analyze(const RunConfig& cfg);

struct DegradeSummary {
  std::size_t written = 0;
  std::vector<std::string> failures;
};

// Every .pgm in `input_dir` goes to `output_dir` under the same name, plus a
// manifest.tsv pairing degraded and clean files.
DegradeSummary cmd_degrade(const std::filesystem::path& input_dir, int quality,
                           const std::filesystem::path& output_dir, std::ostream& err);

struct GradcheckSummary {
  GradientCheckReport euclidean;
  GradientCheckReport softmax;
  bool passed() const { return euclidean.passed && softmax.passed; }
};

// One 8-wide inception module, both losses, on a small random batch.
GradcheckSummary cmd_gradcheck(const RunConfig& cfg, bool corrupt_backward);

// Full command line without the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ninconv
