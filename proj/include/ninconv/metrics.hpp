#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ninconv/image.hpp"

namespace ninconv {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct BinaryMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

// Precision with no predicted positives is 1 when the truth has no positives
// either, else 0. Recall with no positives in truth is 1.
BinaryMetrics metrics_from_counts(const ConfusionCounts& counts);

// Predicted positive iff prob >= threshold; truth values are 0 or 1.
BinaryMetrics binary_metrics(std::span<const double> prob,
                             std::span<const std::uint8_t> truth, double threshold);

enum class CurveKind { pr, roc };

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;  // recall (PR) or false-positive rate (ROC)
  double y = 0.0;  // precision (PR) or true-positive rate (ROC)
};

struct Curve {
  CurveKind kind = CurveKind::roc;
  std::vector<CurvePoint> points;  // thresholds strictly decreasing
};

struct SweepResult {
  Curve pr{CurveKind::pr, {}};
  Curve roc{CurveKind::roc, {}};
  double auc_roc = 0.0;
  double peak_threshold = 0.0;
  double peak_f = 0.0;
};

// Thresholds are +inf followed by every distinct score in descending order.
// AUC is the trapezoid rule over the ROC points; the peak-F threshold is the
// highest one among ties.
SweepResult sweep_curves(std::span<const double> scores,
                         std::span<const std::uint8_t> truth);

struct SegmentationScores {
  double accuracy = 0.0;
  double class_mean = 0.0;  // mean recall over classes present in truth
  double mean_iou = 0.0;    // mean IoU over classes with a non-empty union
};

SegmentationScores segmentation_metrics(std::span<const int> pred,
                                        std::span<const int> truth, int n_classes);

// 10 log10(max^2 / MSE); +inf when the inputs are identical.
double psnr(std::span<const std::uint8_t> clean, std::span<const std::uint8_t> test,
            double max_val = 255.0);
double psnr(const Image& clean, const Image& test, double max_val = 255.0);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), averaged over
// window positions fully inside the image.
double ssim(const Image& clean, const Image& test);

struct MetricReport {
  struct Scalar {
    std::string metric;  // group, e.g. "skin" or "restored"
    std::string name;
    double value = 0.0;
  };
  std::string task;
  std::vector<Scalar> scalars;
  std::vector<Curve> curves;

  void add(std::string metric, std::string name, double value) {
    scalars.push_back({std::move(metric), std::move(name), value});
  }
};

// Fixed six decimals; infinities print as "inf".
std::string format_value(double v);
std::string report_csv(const MetricReport& report);
std::string curve_csv(const Curve& curve);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ninconv
