#ifndef FEATURELESS_WALD_H_
#define FEATURELESS_WALD_H_

// Early-exit extension of the boosted ensemble. After every stage a stopping
// tree looks at the cumulative strong scores; evaluation ends as soon as its
// largest class probability reaches alpha.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "featureless/boost.h"
#include "featureless/common.h"
#include "featureless/dtree.h"

namespace featureless {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Per label, round(fraction * count) samples go to validation. When the
// per-label quotas fall short of round(fraction * N) (e.g. singleton labels)
// the remainder is drawn uniformly from what is left. Both lists ascend.
SplitIndices stratified_split(std::span<const int> labels, double fraction,
                              std::uint64_t seed);

// Holds out whole groups (videos) so that validation samples are never
// correlated with training ones. Groups are taken in shuffled order while
// that brings the held-out count closer to fraction * N; at least one group
// lands on each side.
SplitIndices grouped_split(std::span<const int> groups, double fraction,
                           std::uint64_t seed);

// Fits one stopping tree per stage on (cumulative scores of stages 1..m ->
// true label) over the validation set, with uniform weights.
Ensemble fit_stopping_trees(Ensemble ensemble, const Matrix& validation,
                            std::span<const int> labels, const TreeParams& params);

struct EarlyExitResult {
  int predicted_class = 0;
  int stages_evaluated = 0;
  double stop_confidence = 0.0;
};

// `scores` is caller-provided scratch of size K and holds the cumulative
// scores on return.
EarlyExitResult predict_early_exit(const Ensemble& ensemble,
                                   std::span<const double> sample, double alpha,
                                   std::span<double> scores);
EarlyExitResult predict_early_exit(const Ensemble& ensemble,
                                   std::span<const double> sample, double alpha);

struct EvaluationStats {
  double alpha = 0.0;
  double mean_stages = 0.0;
  std::map<int, std::size_t> stage_histogram;
  double wall_time_per_sample = 0.0;   // seconds, early exit
  double full_time_per_sample = 0.0;   // seconds, all stages
  double speedup_vs_full = 0.0;
  // Filled when labels are given.
  double early_accuracy = 0.0;
  double full_accuracy = 0.0;
  std::vector<int> early_predictions;
  std::vector<int> full_predictions;
};

// Runs early-exit and full prediction over the same samples; timings are the
// best of `repeats` passes to reduce scheduler noise.
EvaluationStats evaluation_stats(const Ensemble& ensemble, const Matrix& samples,
                                 double alpha, std::span<const int> labels = {},
                                 int repeats = 3);

}  // namespace featureless

#endif  // FEATURELESS_WALD_H_
