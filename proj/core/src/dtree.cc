#include "featureless/dtree.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace featureless {

DecisionTree::DecisionTree(std::vector<TreeNode> nodes,
                           std::vector<double> leaf_probs, int num_classes,
                           int max_depth)
    : nodes_(std::move(nodes)),
      leaf_probs_(std::move(leaf_probs)),
      num_classes_(num_classes),
      max_depth_(max_depth) {
  validate();
}

void DecisionTree::validate() const {
  if (num_classes_ < 1) throw Error("malformed tree: no classes");
  if (nodes_.empty()) throw Error("malformed tree: no nodes");
  if (leaf_probs_.size() % num_classes_ != 0) {
    throw Error("malformed tree: leaf table size");
  }
  const int num_nodes = static_cast<int>(nodes_.size());
  const int num_leaves = static_cast<int>(leaf_probs_.size() / num_classes_);
  // Every node must be reached exactly once from the root, children after
  // their parent, so traversal always terminates.
  std::vector<int> parents(nodes_.size(), 0);
  std::vector<bool> leaf_used(num_leaves, false);
  for (int i = 0; i < num_nodes; ++i) {
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) {
      if (n.leaf < 0 || n.leaf >= num_leaves || leaf_used[n.leaf]) {
        throw Error("malformed tree: bad leaf index at node " + std::to_string(i));
      }
      leaf_used[n.leaf] = true;
      continue;
    }
    for (int child : {n.left, n.right}) {
      if (child <= i || child >= num_nodes) {
        throw Error("malformed tree: dangling child index at node " + std::to_string(i));
      }
      ++parents[child];
    }
  }
  for (int i = 1; i < num_nodes; ++i) {
    if (parents[i] != 1) throw Error("malformed tree: node " + std::to_string(i) + " is not a tree node");
  }
  if (std::find(leaf_used.begin(), leaf_used.end(), false) != leaf_used.end()) {
    throw Error("malformed tree: unreferenced leaf");
  }
  for (int l = 0; l < num_leaves; ++l) {
    double total = 0.0;
    for (double p : leaf_probs(l)) {
      if (!(p > 0.0) || !std::isfinite(p)) throw Error("malformed tree: leaf probability not positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("malformed tree: leaf does not sum to 1");
  }
}

int DecisionTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[nodes_[i].left] = level[i] + 1;
      level[nodes_[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

int DecisionTree::max_feature() const {
  int f = -1;
  for (const TreeNode& n : nodes_) f = std::max(f, n.feature);
  return f;
}

double weighted_gini(std::span<const double> class_weights) {
  double total = 0.0;
  double sq = 0.0;
  for (double w : class_weights) {
    total += w;
    sq += w * w;
  }
  return total > 0.0 ? total - sq / total : 0.0;
}

namespace {

void clamp_and_normalize(std::span<double> probs) {
  double total = 0.0;
  for (double& p : probs) {
    p = std::clamp(p, kLeafProbabilityFloor, 1.0);
    total += p;
  }
  for (double& p : probs) p /= total;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> labels,
              std::span<const double> weights, int num_classes,
              int max_depth, double min_leaf_weight)
      : x_(x),
        labels_(labels),
        weights_(weights),
        k_(num_classes),
        max_depth_(max_depth),
        min_leaf_weight_(min_leaf_weight),
        left_(num_classes, 0.0),
        node_classes_(num_classes, 0.0) {}

  DecisionTree build() {
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (weights_[i] > 0.0) all.push_back(i);
    }
    // Sorted once here; children inherit the order through stable
    // partitioning, so no node sorts again.
    Orders orders(x_.cols());
    for (std::size_t f = 0; f < x_.cols(); ++f) orders[f].reserve(all.size());
    for (std::size_t i : all) {
      const auto row = x_.row(i);
      for (std::size_t f = 0; f < x_.cols(); ++f) orders[f].emplace_back(row[f], i);
    }
    for (auto& order : orders) std::sort(order.begin(), order.end());
    goes_left_.assign(labels_.size(), 0);
    nodes_.push_back({});
    grow(0, std::move(all), std::move(orders), 0);
    return DecisionTree(std::move(nodes_), std::move(leaves_), k_, max_depth_);
  }

 private:
  // Per feature: (value, sample) ascending.
  using Orders = std::vector<std::vector<std::pair<double, std::size_t>>>;

  void grow(int node, std::vector<std::size_t> members, Orders orders, int depth) {
    std::fill(node_classes_.begin(), node_classes_.end(), 0.0);
    for (std::size_t i : members) node_classes_[labels_[i]] += weights_[i];
    const int classes_present = static_cast<int>(std::count_if(
        node_classes_.begin(), node_classes_.end(), [](double w) { return w > 0.0; }));
    const double total = std::accumulate(node_classes_.begin(), node_classes_.end(), 0.0);

    SplitChoice split;
    if (depth < max_depth_ && classes_present > 1 && total >= 2.0 * min_leaf_weight_) {
      split = best_split(orders, total);
    }
    if (split.feature < 0) {
      make_leaf(node);
      return;
    }

    std::vector<std::size_t> left_members;
    std::vector<std::size_t> right_members;
    for (std::size_t i : members) {
      const bool left = x_(i, split.feature) <= split.threshold;
      goes_left_[i] = left ? 1 : 0;
      (left ? left_members : right_members).push_back(i);
    }
    members = {};
    Orders left_orders(orders.size());
    Orders right_orders(orders.size());
    for (std::size_t f = 0; f < orders.size(); ++f) {
      left_orders[f].reserve(left_members.size());
      right_orders[f].reserve(right_members.size());
      for (const auto& entry : orders[f]) {
        (goes_left_[entry.second] ? left_orders[f] : right_orders[f]).push_back(entry);
      }
    }
    orders = {};

    const int left = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    const int right = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[node].feature = split.feature;
    nodes_[node].threshold = split.threshold;
    nodes_[node].left = left;
    nodes_[node].right = right;
    grow(left, std::move(left_members), std::move(left_orders), depth + 1);
    grow(right, std::move(right_members), std::move(right_orders), depth + 1);
  }

  void make_leaf(int node) {
    const std::size_t offset = leaves_.size();
    const double total = std::accumulate(node_classes_.begin(), node_classes_.end(), 0.0);
    leaves_.resize(offset + k_);
    std::span<double> probs(leaves_.data() + offset, k_);
    for (int c = 0; c < k_; ++c) probs[c] = node_classes_[c] / total;
    clamp_and_normalize(probs);
    nodes_[node].feature = -1;
    nodes_[node].leaf = static_cast<int>(offset / k_);
  }

  SplitChoice best_split(const Orders& orders, double total) {
    const std::vector<double> totals = node_classes_;
    double total_sq = 0.0;
    for (double w : totals) total_sq += w * w;
    const double parent = total - total_sq / total;
    // Gains below this are rounding noise from the incremental sums.
    const double min_gain = 1e-12 * total;

    SplitChoice best;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      const auto& sorted = orders[f];
      if (sorted.front().first == sorted.back().first) continue;

      double left_w = 0.0;
      double left_sq = 0.0;
      double right_sq = total_sq;
      for (std::size_t j = 0; j + 1 < sorted.size(); ++j) {
        const std::size_t i = sorted[j].second;
        const int c = labels_[i];
        const double w = weights_[i];
        const double old_left = left_[c];
        const double new_left = old_left + w;
        left_[c] = new_left;
        left_sq += new_left * new_left - old_left * old_left;
        const double old_right = totals[c] - old_left;
        const double new_right = totals[c] - new_left;
        right_sq += new_right * new_right - old_right * old_right;
        left_w += w;

        const double a = sorted[j].first;
        const double b = sorted[j + 1].first;
        if (a == b) continue;
        const double right_w = total - left_w;
        if (left_w < min_leaf_weight_ || right_w < min_leaf_weight_ ||
            left_w <= 0.0 || right_w <= 0.0) {
          continue;
        }
        const double gain = parent - (left_w - left_sq / left_w) -
                            (right_w - right_sq / right_w);
        // Gains within rounding of the incumbent count as ties, which the
        // earlier feature and lower threshold win.
        if (gain > min_gain && gain > best.gain + min_gain) {
          double threshold = a + 0.5 * (b - a);
          if (!(threshold < b)) threshold = a;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
      for (const auto& entry : sorted) left_[labels_[entry.second]] = 0.0;
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> labels_;
  std::span<const double> weights_;
  int k_;
  int max_depth_;
  double min_leaf_weight_;
  std::vector<double> left_;
  std::vector<double> node_classes_;
  std::vector<char> goes_left_;
  std::vector<TreeNode> nodes_;
  std::vector<double> leaves_;
};

}  // namespace

std::vector<double> leaf_distribution(std::span<const int> labels,
                                      std::span<const double> weights,
                                      int num_classes) {
  if (labels.size() != weights.size()) throw Error("leaf: labels/weights length mismatch");
  std::vector<double> probs(num_classes, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    probs[labels[i]] += weights[i];
    total += weights[i];
  }
  if (!(total > 0.0)) throw Error("leaf: zero total weight");
  for (double& p : probs) p /= total;
  clamp_and_normalize(probs);
  return probs;
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> labels,
                      std::span<const double> weights, int num_classes,
                      const TreeParams& params) {
  if (x.rows() == 0 || labels.empty()) throw Error("fit_tree: empty sample set");
  if (labels.size() != x.rows() || weights.size() != x.rows()) {
    throw Error("fit_tree: samples, labels and weights differ in length");
  }
  if (num_classes < 1) throw Error("fit_tree: need at least one class");
  if (params.max_depth < 0) throw Error("fit_tree: negative max_depth");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error("fit_tree: label " + std::to_string(labels[i]) + " out of range");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error("fit_tree: weights must be finite and nonnegative");
    }
    total += weights[i];
  }
  if (!(total > 0.0)) throw Error("fit_tree: zero total weight");
  const double min_leaf =
      params.min_leaf_weight >= 0.0 ? params.min_leaf_weight : 1e-6 * total;
  TreeBuilder builder(x, labels, weights, num_classes, params.max_depth, min_leaf);
  return builder.build();
}

}  // namespace featureless
