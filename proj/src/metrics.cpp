#include "ninconv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <numeric>

#include "ninconv/error.hpp"

namespace ninconv {

BinaryMetrics metrics_from_counts(const ConfusionCounts& c) {
  BinaryMetrics m;
  m.counts = c;
  const double tp = static_cast<double>(c.tp);
  const std::uint64_t total = c.total();
  m.accuracy = total ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : 1.0;
  if (c.tp + c.fp == 0) {
    m.precision = c.tp + c.fn == 0 ? 1.0 : 0.0;
  } else {
    m.precision = tp / static_cast<double>(c.tp + c.fp);
  }
  m.recall = c.tp + c.fn == 0 ? 1.0 : tp / static_cast<double>(c.tp + c.fn);
  const double pr = m.precision + m.recall;
  m.f_measure = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

BinaryMetrics binary_metrics(std::span<const double> prob,
                             std::span<const std::uint8_t> truth, double threshold) {
  if (prob.size() != truth.size()) {
    throw Error(fmt::format("binary_metrics: {} scores vs {} labels", prob.size(),
                            truth.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const bool predicted = prob[i] >= threshold;
    const bool actual = truth[i] != 0;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

SweepResult sweep_curves(std::span<const double> scores,
                         std::span<const std::uint8_t> truth) {
  if (scores.size() != truth.size()) {
    throw Error(fmt::format("sweep_curves: {} scores vs {} labels", scores.size(),
                            truth.size()));
  }
  std::uint64_t positives = 0;
  for (std::uint8_t t : truth) positives += t != 0;
  const std::uint64_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error("sweep_curves: ground truth contains a single class");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });

  SweepResult r;
  ConfusionCounts c{0, 0, negatives, positives};
  auto emit = [&](double threshold) {
    const BinaryMetrics m = metrics_from_counts(c);
    r.pr.points.push_back({threshold, m.recall, m.precision});
    r.roc.points.push_back({threshold, static_cast<double>(c.fp) / negatives,
                            static_cast<double>(c.tp) / positives});
    if (r.pr.points.size() == 1 || m.f_measure > r.peak_f) {
      r.peak_f = m.f_measure;
      r.peak_threshold = threshold;
    }
  };
  emit(std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    // Every pixel with this score becomes positive at threshold s.
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (truth[order[i]] != 0) {
        ++c.tp;
        --c.fn;
      } else {
        ++c.fp;
        --c.tn;
      }
    }
    emit(s);
  }
  for (std::size_t i = 1; i < r.roc.points.size(); ++i) {
    const CurvePoint& a = r.roc.points[i - 1];
    const CurvePoint& b = r.roc.points[i];
    r.auc_roc += (b.x - a.x) * (a.y + b.y) / 2.0;
  }
  return r;
}

SegmentationScores segmentation_metrics(std::span<const int> pred,
                                        std::span<const int> truth, int n_classes) {
  if (pred.size() != truth.size()) {
    throw Error(fmt::format("segmentation_metrics: {} predictions vs {} labels",
                            pred.size(), truth.size()));
  }
  if (n_classes < 1) throw Error("segmentation_metrics: need at least one class");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::uint64_t> tp(k, 0), fp(k, 0), fn(k, 0);
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int v : {pred[i], truth[i]}) {
      if (v < 0 || v >= n_classes) {
        throw Error(fmt::format("segmentation_metrics: label {} outside [0, {})", v,
                                n_classes));
      }
    }
    const auto p = static_cast<std::size_t>(pred[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p == t) {
      ++tp[p];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  SegmentationScores s;
  s.accuracy = pred.empty() ? 1.0 : static_cast<double>(correct) / pred.size();
  double recall_sum = 0.0, iou_sum = 0.0;
  int present = 0, with_union = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (tp[c] + fn[c] > 0) {
      recall_sum += static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
      ++present;
    }
    if (tp[c] + fp[c] + fn[c] > 0) {
      iou_sum += static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c] + fn[c]);
      ++with_union;
    }
  }
  s.class_mean = present ? recall_sum / present : 1.0;
  s.mean_iou = with_union ? iou_sum / with_union : 1.0;
  return s;
}

double psnr(std::span<const std::uint8_t> clean, std::span<const std::uint8_t> test,
            double max_val) {
  if (clean.size() != test.size() || clean.empty()) {
    throw Error(fmt::format("psnr: {} vs {} samples", clean.size(), test.size()));
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = static_cast<double>(clean[i]) - test[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(clean.size());
  return 10.0 * std::log10(max_val * max_val / mse);
}

double psnr(const Image& clean, const Image& test, double max_val) {
  if (clean.width != test.width || clean.height != test.height ||
      clean.channels != test.channels) {
    throw Error("psnr: image shapes differ");
  }
  return psnr(clean.samples, test.samples, max_val);
}

double ssim(const Image& clean, const Image& test) {
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  if (clean.channels != 1 || test.channels != 1) throw Error("ssim: grayscale images only");
  if (clean.width != test.width || clean.height != test.height) {
    throw Error("ssim: image shapes differ");
  }
  if (clean.width < kWindow || clean.height < kWindow) {
    throw Error(fmt::format("ssim: {}x{} image smaller than the {}x{} window", clean.width,
                            clean.height, kWindow, kWindow));
  }
  std::vector<double> weight(kWindow * kWindow);
  double wsum = 0.0;
  for (int y = 0; y < kWindow; ++y) {
    for (int x = 0; x < kWindow; ++x) {
      const double dy = y - kWindow / 2, dx = x - kWindow / 2;
      weight[y * kWindow + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      wsum += weight[y * kWindow + x];
    }
  }
  for (double& w : weight) w /= wsum;

  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  std::size_t positions = 0;
  for (int y0 = 0; y0 + kWindow <= clean.height; ++y0) {
    for (int x0 = 0; x0 + kWindow <= clean.width; ++x0) {
      double mx = 0.0, my = 0.0;
      for (int y = 0; y < kWindow; ++y) {
        for (int x = 0; x < kWindow; ++x) {
          const double w = weight[y * kWindow + x];
          mx += w * clean.at(y0 + y, x0 + x);
          my += w * test.at(y0 + y, x0 + x);
        }
      }
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (int y = 0; y < kWindow; ++y) {
        for (int x = 0; x < kWindow; ++x) {
          const double w = weight[y * kWindow + x];
          const double a = clean.at(y0 + y, x0 + x) - mx;
          const double b = test.at(y0 + y, x0 + x) - my;
          vx += w * a * a;
          vy += w * b * b;
          cxy += w * a * b;
        }
      }
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++positions;
    }
  }
  return total / static_cast<double>(positions);
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.6f}", v);
}

std::string report_csv(const MetricReport& report) {
  std::string out = "metric,name,value\n";
  for (const auto& s : report.scalars) {
    out += fmt::format("{},{},{}\n", s.metric, s.name, format_value(s.value));
  }
  return out;
}

std::string curve_csv(const Curve& curve) {
  std::string out = "threshold,x,y\n";
  for (const auto& p : curve.points) {
    out += fmt::format("{},{},{}\n", format_value(p.threshold), format_value(p.x),
                       format_value(p.y));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace ninconv
