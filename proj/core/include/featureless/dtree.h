#ifndef FEATURELESS_DTREE_H_
#define FEATURELESS_DTREE_H_

// Weighted multiclass decision trees with probabilistic leaves. Used both as
// boosting weak learners and as early-exit stopping classifiers.

#include <span>
#include <vector>

#include "featureless/common.h"

namespace featureless {

// Lower bound applied to every leaf probability before renormalization, so
// that log p stays finite in the weight update and the score transform.
inline constexpr double kLeafProbabilityFloor = 1e-5;

struct TreeNode {
  // Internal node: feature >= 0 and left/right index into the node array.
  // Leaf: feature == -1 and `leaf` indexes the leaf distribution table.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
  int max_depth = 15;
  // Absolute weight; a child lighter than this is not created. Negative
  // means 1e-6 of the total training weight.
  double min_leaf_weight = -1.0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  // Takes ownership of a node array; throws if it is not a proper binary tree
  // rooted at node 0 or a leaf distribution is malformed.
  DecisionTree(std::vector<TreeNode> nodes, std::vector<double> leaf_probs,
               int num_classes, int max_depth);

  int num_classes() const { return num_classes_; }
  int max_depth() const { return max_depth_; }
  int depth() const;
  std::size_t num_leaves() const {
    return num_classes_ == 0 ? 0 : leaf_probs_.size() / num_classes_;
  }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& leaf_table() const { return leaf_probs_; }

  // Leaf reached by `x`; goes left when x[feature] <= threshold.
  int leaf_index(std::span<const double> x) const {
    int n = 0;
    while (nodes_[n].feature >= 0) {
      const TreeNode& node = nodes_[n];
      n = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[n].leaf;
  }

  // Same as leaf_index, reading feature f from x[columns[f]].
  int leaf_index(std::span<const double> x, std::span<const int> columns) const {
    int n = 0;
    while (nodes_[n].feature >= 0) {
      const TreeNode& node = nodes_[n];
      n = x[columns[node.feature]] <= node.threshold ? node.left : node.right;
    }
    return nodes_[n].leaf;
  }

  std::span<const double> leaf_probs(int leaf) const {
    return {leaf_probs_.data() + static_cast<std::size_t>(leaf) * num_classes_,
            static_cast<std::size_t>(num_classes_)};
  }

  std::span<const double> predict_proba(std::span<const double> x) const {
    return leaf_probs(leaf_index(x));
  }

  // Largest feature index referenced by a split, or -1 for a single leaf.
  int max_feature() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  void validate() const;

  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_probs_;
  int num_classes_ = 0;
  int max_depth_ = 0;
};

// Weighted class distribution of a leaf: p_k = W_k / W, clamped to
// [kLeafProbabilityFloor, 1] and renormalized.
std::vector<double> leaf_distribution(std::span<const int> labels,
                                      std::span<const double> weights,
                                      int num_classes);

// Greedy weighted-Gini tree over every (feature, midpoint) candidate. Ties go
// to the lowest feature, then the lowest threshold.
DecisionTree fit_tree(const Matrix& x, std::span<const int> labels,
                      std::span<const double> weights, int num_classes,
                      const TreeParams& params = {});

// Weighted Gini impurity scaled by node weight: W - sum_k W_k^2 / W.
double weighted_gini(std::span<const double> class_weights);

}  // namespace featureless

#endif  // FEATURELESS_DTREE_H_
