#include "featureless/dtree.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_util.h"

namespace featureless {
namespace {

using testing::random_labels;
using testing::random_matrix;

TEST(LeafDistribution, WeightedRatio) {
  const std::vector<int> labels{0, 0, 1};
  const std::vector<double> weights{0.2, 0.2, 0.6};
  const auto p = leaf_distribution(labels, weights, 2);
  EXPECT_NEAR(p[0], 0.4, 1e-12);
  EXPECT_NEAR(p[1], 0.6, 1e-12);
}

TEST(LeafDistribution, PureLeafIsClampedAndRenormalized) {
  const std::vector<int> labels{2, 2};
  const std::vector<double> weights{1.0, 1.0};
  const auto p = leaf_distribution(labels, weights, 3);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
  EXPECT_GT(p[0], 0.0);
  EXPECT_NEAR(p[0], kLeafProbabilityFloor / (1.0 + 2 * kLeafProbabilityFloor), 1e-15);
  EXPECT_GE(p[2], 1.0 - 3 * kLeafProbabilityFloor);
}

TEST(LeafDistribution, MoreWeightNeverLowersOwnClass) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto labels = random_labels(12, 4, 100 + trial);
    std::vector<double> w(12);
    for (double& v : w) v = u(rng);
    const auto before = leaf_distribution(labels, w, 4);
    const std::size_t i = trial % 12;
    w[i] *= 1.0 + 3.0 * u(rng);
    const auto after = leaf_distribution(labels, w, 4);
    EXPECT_GE(after[labels[i]], before[labels[i]] - 1e-15);
  }
}

TEST(Tree, ConstantTree) {
  const DecisionTree t({TreeNode{-1, 0.0, -1, -1, 0}}, {0.5, 0.5}, 2, 0);
  const std::vector<double> x{3.0, -7.0};
  const auto p = t.predict_proba(x);
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
  EXPECT_EQ(t.depth(), 0);
  EXPECT_EQ(t.max_feature(), -1);
}

TEST(Tree, RejectsMalformedNodeArrays) {
  // dangling child
  EXPECT_THROW(DecisionTree({TreeNode{0, 0.0, 1, 5, -1}, TreeNode{-1, 0, -1, -1, 0}},
                            {0.5, 0.5}, 2, 1),
               Error);
  // child pointing back at the root
  EXPECT_THROW(DecisionTree({TreeNode{0, 0.0, 0, 0, -1}}, {0.5, 0.5}, 2, 1), Error);
  // leaf probabilities not summing to one
  EXPECT_THROW(DecisionTree({TreeNode{-1, 0.0, -1, -1, 0}}, {0.5, 0.6}, 2, 0), Error);
  // shared leaf row
  EXPECT_THROW(DecisionTree({TreeNode{0, 0.0, 1, 2, -1}, TreeNode{-1, 0, -1, -1, 0},
                             TreeNode{-1, 0, -1, -1, 0}},
                            {0.5, 0.5, 0.5, 0.5}, 2, 1),
               Error);
}

TEST(FitTree, SeparableOneDimensional) {
  Matrix x(8, 1);
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = i < 4 ? -1.0 - i : 1.0 + i;
    labels.push_back(i < 4 ? 0 : 1);
  }
  const std::vector<double> w(8, 1.0 / 8);
  const DecisionTree t = fit_tree(x, labels, w, 2, {1, -1.0});
  EXPECT_EQ(t.depth(), 1);
  EXPECT_EQ(t.nodes()[0].threshold, 2.0);  // midpoint of -1 and 5
  for (int i = 0; i < 8; ++i) {
    const auto p = t.predict_proba(x.row(i));
    EXPECT_EQ(argmax(p), static_cast<std::size_t>(labels[i]));
    EXPECT_GE(p[labels[i]], 1.0 - 2 * kLeafProbabilityFloor);
  }
}

TEST(FitTree, Errors) {
  const Matrix x(2, 1, 0.0);
  const std::vector<int> labels{0, 1};
  EXPECT_THROW(fit_tree(x, labels, std::vector<double>{0.0, 0.0}, 2), Error);
  EXPECT_THROW(fit_tree(Matrix(), {}, {}, 2), Error);
  EXPECT_THROW(fit_tree(x, std::vector<int>{0, 2}, std::vector<double>{1, 1}, 2), Error);
  EXPECT_THROW(fit_tree(x, labels, std::vector<double>{1.0, -1.0}, 2), Error);
}

struct OracleSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exhaustive split search recomputing Gini from scratch for every candidate.
OracleSplit oracle_best_split(const Matrix& x, const std::vector<int>& labels,
                              const std::vector<double>& w,
                              const std::vector<std::size_t>& members, int k) {
  auto gini_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> cw(k, 0.0);
    for (std::size_t i : idx) cw[labels[i]] += w[i];
    return weighted_gini(cw);
  };
  const double parent = gini_of(members);
  OracleSplit best;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::set<double> values;
    for (std::size_t i : members) values.insert(x(i, f));
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t j = 0; j + 1 < sorted.size(); ++j) {
      const double t = sorted[j] + 0.5 * (sorted[j + 1] - sorted[j]);
      std::vector<std::size_t> left, right;
      for (std::size_t i : members) (x(i, f) <= t ? left : right).push_back(i);
      const double gain = parent - gini_of(left) - gini_of(right);
      if (gain > best.gain + 1e-12) best = {static_cast<int>(f), t, gain};
    }
  }
  return best;
}

TEST(FitTree, SplitsMatchExhaustiveSearch) {
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = random_matrix(20, 4, 300 + trial);
    const auto labels = random_labels(20, 3, 400 + trial);
    std::vector<double> w(20);
    std::mt19937_64 rng(500 + trial);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (double& v : w) v = u(rng);
    const DecisionTree t = fit_tree(x, labels, w, 3, {2, 0.0});
    ASSERT_LE(t.depth(), 2);

    // Walk the fitted tree, checking each internal node against the oracle
    // run on the samples that reach it.
    std::vector<std::pair<int, std::vector<std::size_t>>> stack;
    std::vector<std::size_t> all(20);
    for (std::size_t i = 0; i < 20; ++i) all[i] = i;
    stack.emplace_back(0, all);
    while (!stack.empty()) {
      auto [n, members] = stack.back();
      stack.pop_back();
      const TreeNode& node = t.nodes()[n];
      if (node.is_leaf()) continue;
      const OracleSplit o = oracle_best_split(x, labels, w, members, 3);
      EXPECT_EQ(node.feature, o.feature) << "trial " << trial << " node " << n;
      EXPECT_DOUBLE_EQ(node.threshold, o.threshold) << "trial " << trial;
      std::vector<std::size_t> left, right;
      for (std::size_t i : members) (x(i, node.feature) <= node.threshold ? left : right).push_back(i);
      stack.emplace_back(node.left, left);
      stack.emplace_back(node.right, right);
    }
  }
}

std::vector<double> recursive_predict(const DecisionTree& t, int node,
                                      std::span<const double> x) {
  const TreeNode& n = t.nodes()[node];
  if (n.feature < 0) {
    const auto p = t.leaf_probs(n.leaf);
    return {p.begin(), p.end()};
  }
  return recursive_predict(t, x[n.feature] <= n.threshold ? n.left : n.right, x);
}

TEST(Tree, MatchesRecursiveEvaluator) {
  const Matrix x = random_matrix(300, 6, 21);
  const auto labels = random_labels(300, 5, 22);
  const std::vector<double> w(300, 1.0);
  const DecisionTree t = fit_tree(x, labels, w, 5, {8, -1.0});
  EXPECT_GT(t.num_leaves(), 8u);
  const Matrix probe = random_matrix(2000, 6, 23, -0.2, 1.2);
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    const auto p = t.predict_proba(probe.row(i));
    EXPECT_EQ(std::vector<double>(p.begin(), p.end()), recursive_predict(t, 0, probe.row(i)));
  }
}

TEST(Tree, InvariantsAndDeterminism) {
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(150, 5, 40 + trial);
    const auto labels = random_labels(150, 4, 60 + trial);
    std::vector<double> w(150, 1.0);
    w[trial] = 0.0;
    const int depth = 1 + trial % 6;
    const DecisionTree a = fit_tree(x, labels, w, 4, {depth, -1.0});
    const DecisionTree b = fit_tree(x, labels, w, 4, {depth, -1.0});
    EXPECT_EQ(a, b);
    EXPECT_LE(a.depth(), depth);
    for (std::size_t l = 0; l < a.num_leaves(); ++l) {
      double total = 0.0;
      for (double p : a.leaf_probs(static_cast<int>(l))) {
        EXPECT_GE(p, kLeafProbabilityFloor / (1.0 + 4 * kLeafProbabilityFloor));
        total += p;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Tree, ColumnMappedLeafIndex) {
  const Matrix x = random_matrix(100, 3, 70);
  const auto labels = random_labels(100, 3, 71);
  const DecisionTree t = fit_tree(x, labels, std::vector<double>(100, 1.0), 3, {4, -1.0});
  const std::vector<int> columns{5, 0, 2};
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> wide(6);
    for (double& v : wide) v = u(rng);
    const std::vector<double> narrow{wide[5], wide[0], wide[2]};
    EXPECT_EQ(t.leaf_index(wide, columns), t.leaf_index(narrow));
  }
}

}  // namespace
}  // namespace featureless
