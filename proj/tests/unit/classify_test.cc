#include "featureless/classify.h"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "test_util.h"

namespace featureless {
namespace {

using testing::gaussian_blobs;
using testing::random_matrix;

double ap(std::vector<double> scores, std::vector<bool> positive) {
  std::unique_ptr<bool[]> p(new bool[positive.size()]);
  for (std::size_t i = 0; i < positive.size(); ++i) p[i] = positive[i];
  return average_precision(scores, {p.get(), positive.size()});
}

TEST(AveragePrecision, HandEvaluated) {
  EXPECT_DOUBLE_EQ(ap({3, 2, 1}, {true, false, false}), 1.0);
  EXPECT_DOUBLE_EQ(ap({2, 1}, {false, true}), 0.5);
  EXPECT_DOUBLE_EQ(ap({4, 3, 2, 1}, {true, false, true, false}), 5.0 / 6.0);
  EXPECT_THROW(ap({1, 2}, {false, false}), Error);
}

TEST(AveragePrecision, TiesKeepInputOrder) {
  EXPECT_DOUBLE_EQ(ap({1, 1, 1}, {true, false, false}), 1.0);
  EXPECT_DOUBLE_EQ(ap({1, 1, 1}, {false, false, true}), 1.0 / 3.0);
}

TEST(AveragePrecision, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution b(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(25), t(25);
    std::vector<bool> pos(25);
    for (int i = 0; i < 25; ++i) {
      s[i] = n(rng);
      t[i] = std::exp(3.0 * s[i]) + 7.0;
      pos[i] = b(rng);
    }
    pos[trial % 25] = true;
    EXPECT_NEAR(ap(s, pos), ap(t, pos), 1e-15);
  }
}

TEST(AveragePrecision, ReversedRankingWithSinglePositive) {
  const int n = 9;
  std::vector<double> s(n);
  std::vector<bool> pos(n, false);
  for (int i = 0; i < n; ++i) s[i] = n - i;
  pos[n - 1] = true;
  EXPECT_DOUBLE_EQ(ap(s, pos), 1.0 / n);
}

TEST(MeanAveragePrecision, SkipsNaN) {
  const std::vector<double> aps{1.0, std::nan(""), 0.5};
  EXPECT_DOUBLE_EQ(mean_average_precision(aps), 0.75);
  EXPECT_THROW(mean_average_precision(std::vector<double>{std::nan("")}), Error);
}

TEST(LinearSvm, SeparableTwoClasses) {
  std::vector<int> y;
  const Matrix x = gaussian_blobs(2, 50, 2, 8.0, 3, y);
  const LinearModel m = fit_linear_ovr(x, y, 2);
  int correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) correct += predict_class(m, x.row(i)) == y[i];
  EXPECT_EQ(correct, 100);
  const auto report = evaluate_map(m, x, y);
  EXPECT_DOUBLE_EQ(report.map, 1.0);
  EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
}

TEST(LinearSvm, DeterministicPerSeed) {
  std::vector<int> y;
  const Matrix x = gaussian_blobs(4, 30, 6, 2.0, 4, y);
  EXPECT_EQ(fit_linear_ovr(x, y, 4), fit_linear_ovr(x, y, 4));
  LinearConfig other;
  other.seed = 99;
  EXPECT_NE(fit_linear_ovr(x, y, 4).weights, fit_linear_ovr(x, y, 4, other).weights);
}

TEST(LinearSvm, Errors) {
  const Matrix x = random_matrix(6, 3, 1);
  EXPECT_THROW(fit_linear_ovr(x, std::vector<int>(6, 1), 3), Error);
  EXPECT_THROW(fit_linear_ovr(x, std::vector<int>(5, 0), 2), Error);
  EXPECT_THROW(fit_linear_ovr(x, std::vector<int>{0, 1, 0, 1, 0, 1}, 1), Error);
  const LinearModel m = fit_linear_ovr(x, std::vector<int>{0, 1, 0, 1, 0, 1}, 2);
  EXPECT_THROW(predict_margin(m, std::vector<double>{1.0}), Error);
}

LinearModel random_model(int k, int d, std::uint64_t seed) {
  LinearModel m;
  m.num_classes = k;
  m.dim = d;
  m.weights = random_matrix(k, d, seed, -2.0, 2.0);
  m.biases.resize(k);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& b : m.biases) b = u(rng);
  return m;
}

TEST(PredictMargin, LinearityAndDotProductOracle) {
  const LinearModel m = random_model(3, 5, 10);
  const auto at_zero = predict_margin(m, std::vector<double>(5, 0.0));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(at_zero[c], m.biases[c]);

  const Matrix xs = random_matrix(200, 5, 11, -3.0, 3.0);
  for (std::size_t i = 0; i + 1 < xs.rows(); i += 2) {
    const auto x = xs.row(i);
    const auto y = xs.row(i + 1);
    const auto fx = predict_margin(m, x);
    const auto fy = predict_margin(m, y);
    std::vector<double> x2(5), mix(5);
    const double a = 0.7, b = -1.3;
    for (int j = 0; j < 5; ++j) {
      x2[j] = 2.0 * x[j];
      mix[j] = a * x[j] + b * y[j];
    }
    const auto f2 = predict_margin(m, x2);
    const auto fmix = predict_margin(m, mix);
    for (int c = 0; c < 3; ++c) {
      double oracle = m.biases[c];
      for (int j = 0; j < 5; ++j) oracle += m.weights(c, j) * x[j];
      EXPECT_NEAR(fx[c], oracle, 1e-12);
      EXPECT_NEAR(f2[c] - m.biases[c], 2.0 * (fx[c] - m.biases[c]), 1e-9);
      EXPECT_NEAR(fmix[c], a * fx[c] + b * fy[c] - (a + b - 1.0) * m.biases[c], 1e-9);
    }
  }
}

TEST(LinearSvm, StandardizedModelStoresStatistics) {
  std::vector<int> y;
  Matrix x = gaussian_blobs(3, 40, 4, 3.0, 12, y);
  for (std::size_t i = 0; i < x.rows(); ++i) x(i, 3) = 1000.0 + 50.0 * x(i, 3);
  LinearConfig cfg;
  cfg.standardize = true;
  const LinearModel m = fit_linear_ovr(x, y, 3, cfg);
  ASSERT_EQ(m.feature_mean.size(), 4u);
  EXPECT_NEAR(m.feature_mean[3], 1000.0, 20.0);
  EXPECT_LT(m.feature_scale[3], m.feature_scale[0] / 10.0);
  EXPECT_GE(evaluate_map(m, x, y).accuracy, 0.9);
}

}  // namespace
}  // namespace featureless
