#ifndef FEATURELESS_BOOST_H_
#define FEATURELESS_BOOST_H_

// Real-valued multiclass Adaboost over probabilistic trees: label coding,
// multiplicative weight updates, pool sampling with trimming, random feature
// subsets and the log-probability score transform.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "featureless/common.h"
#include "featureless/dtree.h"

namespace featureless {

// Row i is the coding of sample i: 1 at its label, -1/(K-1) elsewhere.
Matrix encode_labels(std::span<const int> labels, int num_classes);

// Scores s_k = (K-1) * (log p_k - mean_j log p_j). Sums to zero.
void weak_scores(std::span<const double> probs, std::span<double> scores);
std::vector<double> weak_scores(std::span<const double> probs);

// Multiplicative factor exp(-(K-1)/K * sum_k y_k log p_k) of one sample.
double weight_factor(std::span<const double> coding, std::span<const double> probs);

// Applies weight_factor to every sample (probs is N x K) and renormalizes to
// unit sum. Weights stay strictly positive: underflow is floored at the
// smallest normal double.
std::vector<double> update_weights(std::span<const double> weights,
                                   const Matrix& codings, const Matrix& probs);

struct PoolSamplingOptions {
  double pool_fraction = 0.1;
  // Lightest samples whose cumulative mass stays within this fraction are
  // dropped before sampling.
  double trim_mass = 0.01;
};

// Quasi-random weighted sampling with trimming. Each surviving sample gets
// floor(n * w_i) copies; the fractional remainders are filled by systematic
// resampling so the pool holds exactly n = round(fraction * N) indices.
// Indices are returned in ascending order.
std::vector<std::size_t> qws_trim_sample(std::span<const double> weights,
                                         const PoolSamplingOptions& options,
                                         std::uint64_t seed);

struct SubsetOptions {
  int subset_size = 0;   // 0 -> round(sqrt(D))
  int candidates = 0;    // 0 -> round(sqrt(D))
  int probe_depth = 3;
};

int default_subset_size(std::size_t dim);

// Draws `candidates` random subsets of distinct dimensions, scores each by the
// weighted training accuracy of a shallow probe tree, and keeps the best
// (earliest draw on ties).
std::vector<int> select_feature_subset(const Matrix& x, std::span<const int> labels,
                                       std::span<const double> weights,
                                       int num_classes, const SubsetOptions& options,
                                       std::uint64_t seed);

struct WeakClassifier {
  std::vector<int> features;
  DecisionTree tree;
  // Per-leaf score vectors derived from the leaf probabilities.
  std::vector<double> leaf_scores;

  int leaf_index(std::span<const double> sample) const {
    return tree.leaf_index(sample, features);
  }
  std::span<const double> scores(int leaf) const {
    const auto k = static_cast<std::size_t>(tree.num_classes());
    return {leaf_scores.data() + leaf * k, k};
  }

  friend bool operator==(const WeakClassifier&, const WeakClassifier&) = default;
};

WeakClassifier make_weak_classifier(std::vector<int> features, DecisionTree tree);

// Stopping gate attached after a boosting stage. leaf_max caches the largest
// class probability of each leaf and max_confidence the largest of those.
struct StoppingStage {
  DecisionTree tree;
  std::vector<double> leaf_max;
  double max_confidence = 0.0;

  friend bool operator==(const StoppingStage&, const StoppingStage&) = default;
};

StoppingStage make_stopping_stage(DecisionTree tree);

struct Ensemble {
  int num_classes = 0;
  int dim = 0;
  std::vector<WeakClassifier> weaks;
  std::vector<StoppingStage> stopping;  // empty or one per weak
  double alpha = 0.97;

  int stages() const { return static_cast<int>(weaks.size()); }
  bool has_stopping() const { return !stopping.empty(); }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

struct BoostConfig {
  int stages = 1000;
  int max_depth = 15;
  PoolSamplingOptions pool;
  SubsetOptions subset;
  // Fraction of the pool weight below which a child is not split off.
  double min_leaf_fraction = 1e-6;
  std::uint64_t seed = 1;
};

struct StageReport {
  int stage = 0;
  std::size_t pool_size = 0;
  std::size_t distinct_in_pool = 0;
  double training_accuracy = 0.0;
};

using StageCallback = std::function<void(const StageReport&)>;

Ensemble fit_adaboost(const Matrix& samples, std::span<const int> labels,
                      int num_classes, const BoostConfig& config,
                      const StageCallback& on_stage = {});

struct StrongPrediction {
  std::vector<double> scores;
  std::vector<double> probs;
  int predicted_class() const { return static_cast<int>(argmax(scores)); }
};

// Adds the scores of stages [0, stages) to `scores`.
void accumulate_scores(const Ensemble& ensemble, std::span<const double> sample,
                       int stages, std::span<double> scores);

// Softmax with max subtraction.
std::vector<double> softmax(std::span<const double> scores);

StrongPrediction predict_strong(const Ensemble& ensemble,
                                std::span<const double> sample);

}  // namespace featureless

#endif  // FEATURELESS_BOOST_H_
