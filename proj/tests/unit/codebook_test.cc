#include "featureless/codebook.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "test_util.h"

namespace featureless {
namespace {

using testing::random_matrix;

double squared(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

TEST(KMeans, KEqualsNReturnsThePoints) {
  Matrix x(4, 2);
  const double pts[4][2] = {{0, 0}, {1, 0}, {0, 5}, {3, 3}};
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = pts[i][0];
    x(i, 1) = pts[i][1];
  }
  const KMeansResult r = kmeans_fit(x, {4, 10, 1});
  EXPECT_EQ(r.distortion.back(), 0.0);
  for (int i = 0; i < 4; ++i) {
    const int c = assign_codeword(r.codebook, x.row(i));
    EXPECT_EQ(squared(r.codebook.centers.row(c), x.row(i)), 0.0);
  }
}

TEST(KMeans, TwoBlobsMatchExhaustivePartition) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.3);
  Matrix x(12, 2);
  for (int i = 0; i < 12; ++i) {
    const double base = i < 6 ? 0.0 : 10.0;
    x(i, 0) = base + n(rng);
    x(i, 1) = base + n(rng);
  }
  // Best 2-partition over all 2^11 - 1 splits (point 0 fixed in part A).
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_a, best_b;
  for (int mask = 0; mask < (1 << 11); ++mask) {
    std::vector<double> sa(2, 0.0), sb(2, 0.0);
    int na = 0, nb = 0;
    for (int i = 0; i < 12; ++i) {
      const bool in_b = i > 0 && ((mask >> (i - 1)) & 1);
      auto& s = in_b ? sb : sa;
      s[0] += x(i, 0);
      s[1] += x(i, 1);
      ++(in_b ? nb : na);
    }
    if (nb == 0) continue;
    for (double& v : sa) v /= na;
    for (double& v : sb) v /= nb;
    double cost = 0.0;
    for (int i = 0; i < 12; ++i) {
      const bool in_b = i > 0 && ((mask >> (i - 1)) & 1);
      cost += squared(x.row(i), in_b ? sb : sa);
    }
    if (cost < best) {
      best = cost;
      best_a = sa;
      best_b = sb;
    }
  }
  const KMeansResult r = kmeans_fit(x, {2, 50, 5});
  EXPECT_NEAR(r.distortion.back(), best, 1e-9);
  const int ca = assign_codeword(r.codebook, best_a);
  const int cb = assign_codeword(r.codebook, best_b);
  EXPECT_NE(ca, cb);
  EXPECT_LT(std::sqrt(squared(r.codebook.centers.row(ca), best_a)), 0.5);
  EXPECT_LT(std::sqrt(squared(r.codebook.centers.row(cb), best_b)), 0.5);
}

TEST(KMeans, Errors) {
  Matrix x(5, 2, 0.0);
  x(1, 0) = 1.0;
  x(2, 1) = 1.0;  // 3 distinct points
  EXPECT_EQ(count_distinct_rows(x), 3u);
  EXPECT_THROW(kmeans_fit(x, {5, 10, 1}), Error);
  EXPECT_THROW(kmeans_fit(x, {4, 10, 1}), Error);
  EXPECT_THROW(kmeans_fit(x, {1, 10, 1}), Error);
  EXPECT_THROW(kmeans_fit(x, {2, 0, 1}), Error);
  EXPECT_NO_THROW(kmeans_fit(x, {3, 10, 1}));
}

TEST(KMeans, DistortionNonIncreasingOnRandomInstances) {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + trial * 3;
    const std::size_t d = 1 + trial % 7;
    const int k = 2 + trial % 9;
    const Matrix x = random_matrix(n, d, 1000 + trial);
    const KMeansResult r = kmeans_fit(x, {k, 100, static_cast<std::uint64_t>(trial)});
    ASSERT_FALSE(r.distortion.empty());
    for (std::size_t i = 1; i < r.distortion.size(); ++i) {
      EXPECT_LE(r.distortion[i], r.distortion[i - 1] * (1.0 + 1e-12)) << "trial " << trial;
    }
    EXPECT_EQ(r.codebook.size(), k);
  }
}

TEST(KMeans, SeededDeterminism) {
  const Matrix x = random_matrix(300, 9, 3);
  const KMeansResult a = kmeans_fit(x, {12, 30, 77}, DescriptorKind::kHof);
  const KMeansResult b = kmeans_fit(x, {12, 30, 77}, DescriptorKind::kHof);
  EXPECT_EQ(a.codebook, b.codebook);
  EXPECT_EQ(a.codebook.kind, DescriptorKind::kHof);
  EXPECT_EQ(a.assignments, b.assignments);
}

TEST(AssignCodeword, ExactMatchTieAndErrors) {
  Codebook cb{Matrix(4, 2, 0.0), DescriptorKind::kHog};
  cb.centers(1, 0) = 1.0;
  cb.centers(2, 0) = -1.0;
  cb.centers(3, 0) = 5.0;
  cb.centers(3, 1) = 5.0;
  EXPECT_EQ(assign_codeword(cb, std::vector<double>{5.0, 5.0}), 3);
  // origin sits halfway between centers 1 and 2 once center 0 moves away
  cb.centers(0, 1) = 100.0;
  EXPECT_EQ(assign_codeword(cb, std::vector<double>{0.0, 0.0}), 1);
  EXPECT_THROW(assign_codeword(cb, std::vector<double>{1.0}), Error);
}

TEST(AssignCodeword, MatchesLinearScan) {
  const Matrix centers = random_matrix(17, 5, 40);
  const Codebook cb{centers, DescriptorKind::kHog};
  const Matrix probes = random_matrix(1000, 5, 41);
  for (std::size_t i = 0; i < probes.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      const double d = squared(centers.row(c), probes.row(i));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    EXPECT_EQ(assign_codeword(cb, probes.row(i)), best);
  }
}

TEST(Codebookless, IdentityLabels) {
  EXPECT_EQ(codebookless_labels(5), (std::vector<int>{0, 1, 2, 3, 4}));
  const auto many = codebookless_labels(100);
  EXPECT_EQ(std::set<int>(many.begin(), many.end()).size(), 100u);
  EXPECT_THROW(codebookless_labels(1), Error);
  EXPECT_THROW(codebookless_labels(0), Error);
}

}  // namespace
}  // namespace featureless
