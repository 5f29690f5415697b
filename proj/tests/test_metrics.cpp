#include <gtest/gtest.h>

#include <cmath>

#include "ninconv/error.hpp"
#include "ninconv/metrics.hpp"
#include "ninconv/synthetic.hpp"
#include "oracles.hpp"

using namespace ninconv;

TEST(Binary, HandCounts) {
  const std::vector<double> p{0.8, 0.6, 0.4, 0.2};
  const std::vector<std::uint8_t> t{1, 1, 0, 0};
  const BinaryMetrics m = binary_metrics(p, t, 0.5);
  EXPECT_EQ(m.counts.tp, 2u);
  EXPECT_EQ(m.counts.tn, 2u);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f_measure, 1.0);

  const BinaryMetrics none = binary_metrics(p, t, 0.95);
  EXPECT_EQ(none.accuracy, 0.5);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.f_measure, 0.0);

  const std::vector<std::uint8_t> negatives(4, 0);
  EXPECT_EQ(binary_metrics(p, negatives, 0.95).precision, 1.0);
  EXPECT_THROW(binary_metrics(p, std::vector<std::uint8_t>{1}, 0.5), Error);
}

TEST(Binary, FMeasureIsHarmonicMean) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> p(40);
    std::vector<std::uint8_t> t(40);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = rng.uniform();
      t[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    const BinaryMetrics m = binary_metrics(p, t, rng.uniform());
    const auto& c = m.counts;
    EXPECT_EQ(c.total(), 40u);
    const double prec = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : m.precision;
    const double rec = c.tp + c.fn ? double(c.tp) / double(c.tp + c.fn) : 1.0;
    if (prec + rec > 0) EXPECT_NEAR(m.f_measure, 2 * prec * rec / (prec + rec), 1e-12);
    for (double v : {m.accuracy, m.precision, m.recall, m.f_measure}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Sweep, TrivialCases) {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<std::uint8_t> t{1, 0};
  const SweepResult r = sweep_curves(s, t);
  EXPECT_EQ(r.auc_roc, 1.0);
  EXPECT_EQ(r.peak_f, 1.0);
  EXPECT_EQ(r.peak_threshold, 0.9);
  EXPECT_TRUE(std::isinf(r.roc.points.front().threshold));

  const std::vector<double> flat(6, 0.5);
  const std::vector<std::uint8_t> half{1, 0, 1, 0, 1, 0};
  EXPECT_EQ(sweep_curves(flat, half).auc_roc, 0.5);

  const std::vector<std::uint8_t> ones(6, 1);
  EXPECT_THROW(sweep_curves(flat, ones), Error);
}

TEST(Sweep, AucMatchesPairwiseOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng.below(480);
    std::vector<double> s(n);
    std::vector<std::uint8_t> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores force plenty of ties.
      s[i] = std::round(rng.uniform() * 20.0) / 20.0;
      t[i] = rng.uniform() < 0.3 + 0.4 * s[i] ? 1 : 0;
    }
    t[0] = 1;
    t[1] = 0;
    EXPECT_NEAR(sweep_curves(s, t).auc_roc, oracle::pairwise_auc(s, t), 1e-9);
  }
}

TEST(Sweep, CurveInvariantsAndPeak) {
  Rng rng(3);
  std::vector<double> s(300);
  std::vector<std::uint8_t> t(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    t[i] = rng.uniform() < s[i] ? 1 : 0;
  }
  const SweepResult r = sweep_curves(s, t);
  for (std::size_t i = 1; i < r.roc.points.size(); ++i) {
    EXPECT_LT(r.roc.points[i].threshold, r.roc.points[i - 1].threshold);
    EXPECT_GE(r.roc.points[i].x, r.roc.points[i - 1].x);
  }
  EXPECT_EQ(r.pr.points.size(), r.roc.points.size());
  for (double th : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    EXPECT_GE(r.peak_f, binary_metrics(s, t, th).f_measure);
  }
  EXPECT_NEAR(binary_metrics(s, t, r.peak_threshold).f_measure, r.peak_f, 1e-12);
}

TEST(Segmentation, HandCounts) {
  const std::vector<int> truth{0, 0, 1, 1};
  EXPECT_EQ(segmentation_metrics(truth, truth, 2).mean_iou, 1.0);
  const std::vector<int> zeros(4, 0);
  const SegmentationScores s = segmentation_metrics(zeros, truth, 2);
  EXPECT_EQ(s.accuracy, 0.5);
  EXPECT_EQ(s.class_mean, 0.5);
  EXPECT_EQ(s.mean_iou, 0.25);

  // Class 2 appears nowhere and is left out of both means.
  const SegmentationScores absent = segmentation_metrics(truth, truth, 3);
  EXPECT_EQ(absent.class_mean, 1.0);
  EXPECT_EQ(absent.mean_iou, 1.0);
  EXPECT_THROW(segmentation_metrics(std::vector<int>{0, 3, 0, 0}, truth, 3), Error);
}

TEST(Psnr, ClosedForms) {
  Image a(16, 16, 1, 100), b(16, 16, 1, 101);
  EXPECT_NEAR(psnr(a, b), 20 * std::log10(255.0), 1e-12);
  EXPECT_NEAR(psnr(a, b), 48.1308, 1e-3);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_EQ(psnr(Image(4, 4, 1, 0), Image(4, 4, 1, 255)), 0.0);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  EXPECT_THROW(psnr(a, Image(15, 16, 1)), Error);
}

TEST(Ssim, IdentityConstantsAndInversion) {
  const Image img = synthetic_gradient_images(1, 40, 9)[0];
  EXPECT_EQ(ssim(img, img), 1.0);

  Image inverted = img;
  for (auto& v : inverted.samples) v = static_cast<std::uint8_t>(255 - v);
  EXPECT_LT(ssim(img, inverted), 0.3);
  EXPECT_NEAR(ssim(img, inverted), ssim(inverted, img), 1e-15);

  const double c1 = std::pow(0.01 * 255, 2);
  const double closed = (2 * 128.0 * 138.0 + c1) / (128.0 * 128.0 + 138.0 * 138.0 + c1);
  EXPECT_NEAR(ssim(Image(20, 20, 1, 128), Image(20, 20, 1, 138)), closed, 1e-12);
  EXPECT_THROW(ssim(Image(10, 20, 1), Image(10, 20, 1)), Error);
}

TEST(Report, CsvFormatting) {
  MetricReport r;
  r.task = "restoration";
  r.add("restored", "psnr", std::numeric_limits<double>::infinity());
  r.add("restored", "ssim", 0.5);
  EXPECT_EQ(report_csv(r), "metric,name,value\nrestored,psnr,inf\nrestored,ssim,0.500000\n");
  Curve c{CurveKind::roc, {{std::numeric_limits<double>::infinity(), 0, 0}, {0.25, 1, 1}}};
  EXPECT_EQ(curve_csv(c), "threshold,x,y\ninf,0.000000,0.000000\n0.250000,1.000000,1.000000\n");
}
