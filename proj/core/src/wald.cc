#include "featureless/wald.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace featureless {

SplitIndices stratified_split(std::span<const int> labels, double fraction,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error("validation fraction must be in (0, 1)");
  }
  const std::size_t n = labels.size();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  // Group the shuffled indices by label, keeping the shuffled order inside.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  std::vector<bool> in_validation(n, false);
  std::size_t chosen = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && labels[order[end]] == labels[order[start]]) ++end;
    const auto quota = static_cast<std::size_t>(
        std::round(fraction * static_cast<double>(end - start)));
    for (std::size_t j = start; j < start + std::min(quota, end - start - 1); ++j) {
      in_validation[order[j]] = true;
      ++chosen;
    }
    start = end;
  }
  const auto target = static_cast<std::size_t>(std::round(fraction * static_cast<double>(n)));
  if (chosen < target) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_validation[i]) rest.push_back(i);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t j = 0; j < rest.size() && chosen < target; ++j, ++chosen) {
      in_validation[rest[j]] = true;
    }
  }
  SplitIndices split;
  for (std::size_t i = 0; i < n; ++i) {
    (in_validation[i] ? split.validation : split.train).push_back(i);
  }
  return split;
}

SplitIndices grouped_split(std::span<const int> groups, double fraction,
                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error("validation fraction must be in (0, 1)");
  }
  const std::size_t n = groups.size();
  std::map<int, std::size_t> sizes;
  for (int g : groups) ++sizes[g];
  if (sizes.size() < 2) throw Error("grouped split needs at least two groups");
  std::vector<int> order;
  for (const auto& [g, size] : sizes) order.push_back(g);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double target = fraction * static_cast<double>(n);
  std::set<int> held;
  std::size_t chosen = 0;
  for (int g : order) {
    const std::size_t next = chosen + sizes[g];
    if (next == n) continue;
    if (held.empty() ||
        std::abs(static_cast<double>(next) - target) < std::abs(static_cast<double>(chosen) - target)) {
      held.insert(g);
      chosen = next;
    }
  }
  SplitIndices split;
  for (std::size_t i = 0; i < n; ++i) {
    (held.contains(groups[i]) ? split.validation : split.train).push_back(i);
  }
  return split;
}

Ensemble fit_stopping_trees(Ensemble ensemble, const Matrix& validation,
                            std::span<const int> labels, const TreeParams& params) {
  if (ensemble.weaks.empty()) throw Error("stopping trees need a trained ensemble");
  if (ensemble.has_stopping()) throw Error("ensemble already has stopping stages");
  if (validation.rows() == 0) throw Error("stopping trees need a nonempty validation set");
  if (labels.size() != validation.rows()) {
    throw Error("validation samples and labels differ in length");
  }
  const std::size_t n = validation.rows();
  const auto k = static_cast<std::size_t>(ensemble.num_classes);
  Matrix cumulative(n, k);
  const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
  ensemble.stopping.reserve(ensemble.weaks.size());
  for (const WeakClassifier& weak : ensemble.weaks) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = weak.scores(weak.leaf_index(validation.row(i)));
      auto acc = cumulative.row(i);
      for (std::size_t j = 0; j < k; ++j) acc[j] += s[j];
    }
    ensemble.stopping.push_back(make_stopping_stage(
        fit_tree(cumulative, labels, uniform, ensemble.num_classes, params)));
  }
  return ensemble;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error("alpha must be in [0, 1], got " + std::to_string(alpha));
  }
}

}  // namespace

EarlyExitResult predict_early_exit(const Ensemble& ensemble,
                                   std::span<const double> sample, double alpha,
                                   std::span<double> scores) {
  if (!ensemble.has_stopping()) throw Error("ensemble has no stopping stages");
  check_alpha(alpha);
  if (static_cast<int>(sample.size()) != ensemble.dim) {
    throw Error("prediction: sample has " + std::to_string(sample.size()) +
                " dims, ensemble expects " + std::to_string(ensemble.dim));
  }
  const auto k = static_cast<std::size_t>(ensemble.num_classes);
  std::fill(scores.begin(), scores.end(), 0.0);
  const int stages = ensemble.stages();
  EarlyExitResult result;
  for (int m = 0; m < stages; ++m) {
    const WeakClassifier& weak = ensemble.weaks[m];
    const double* s = weak.leaf_scores.data() + weak.leaf_index(sample) * k;
    for (std::size_t j = 0; j < k; ++j) scores[j] += s[j];
    const StoppingStage& gate = ensemble.stopping[m];
    const bool last = m + 1 == stages;
    // A gate whose most confident leaf is below alpha can never fire.
    if (!last && gate.max_confidence < alpha) continue;
    const double confidence = gate.leaf_max[gate.tree.leaf_index(scores)];
    if (confidence >= alpha || last) {
      result.stages_evaluated = m + 1;
      result.stop_confidence = confidence;
      break;
    }
  }
  result.predicted_class = static_cast<int>(argmax(scores));
  return result;
}

EarlyExitResult predict_early_exit(const Ensemble& ensemble,
                                   std::span<const double> sample, double alpha) {
  std::vector<double> scores(ensemble.num_classes);
  return predict_early_exit(ensemble, sample, alpha, scores);
}

EvaluationStats evaluation_stats(const Ensemble& ensemble, const Matrix& samples,
                                 double alpha, std::span<const int> labels,
                                 int repeats) {
  if (samples.rows() == 0) throw Error("evaluation needs samples");
  if (!labels.empty() && labels.size() != samples.rows()) {
    throw Error("evaluation: samples and labels differ in length");
  }
  using Clock = std::chrono::steady_clock;
  const std::size_t n = samples.rows();
  EvaluationStats stats;
  stats.alpha = alpha;
  stats.early_predictions.assign(n, 0);
  stats.full_predictions.assign(n, 0);
  std::vector<int> stages(n, 0);

  double best_early = std::numeric_limits<double>::infinity();
  double best_full = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, repeats); ++r) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      const EarlyExitResult res = predict_early_exit(ensemble, samples.row(i), alpha);
      stats.early_predictions[i] = res.predicted_class;
      stages[i] = res.stages_evaluated;
    }
    const auto t1 = Clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      stats.full_predictions[i] = predict_strong(ensemble, samples.row(i)).predicted_class();
    }
    const auto t2 = Clock::now();
    best_early = std::min(best_early, std::chrono::duration<double>(t1 - t0).count());
    best_full = std::min(best_full, std::chrono::duration<double>(t2 - t1).count());
  }

  double total_stages = 0.0;
  for (int s : stages) {
    total_stages += s;
    ++stats.stage_histogram[s];
  }
  stats.mean_stages = total_stages / static_cast<double>(n);
  stats.wall_time_per_sample = best_early / static_cast<double>(n);
  stats.full_time_per_sample = best_full / static_cast<double>(n);
  stats.speedup_vs_full = best_early > 0.0 ? best_full / best_early : 0.0;
  if (!labels.empty()) {
    std::size_t early_ok = 0;
    std::size_t full_ok = 0;
    for (std::size_t i = 0; i < n; ++i) {
      early_ok += stats.early_predictions[i] == labels[i];
      full_ok += stats.full_predictions[i] == labels[i];
    }
    stats.early_accuracy = static_cast<double>(early_ok) / static_cast<double>(n);
    stats.full_accuracy = static_cast<double>(full_ok) / static_cast<double>(n);
  }
  return stats;
}

}  // namespace featureless
