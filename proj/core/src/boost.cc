#include "featureless/boost.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace featureless {

Matrix encode_labels(std::span<const int> labels, int num_classes) {
  if (num_classes < 2) throw Error("label coding needs K >= 2");
  const double off = -1.0 / (num_classes - 1);
  Matrix codes(labels.size(), num_classes, off);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error("label " + std::to_string(labels[i]) + " out of range [0," +
                  std::to_string(num_classes) + ")");
    }
    codes(i, labels[i]) = 1.0;
  }
  return codes;
}

void weak_scores(std::span<const double> probs, std::span<double> scores) {
  const std::size_t k = probs.size();
  double mean_log = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!(probs[j] > 0.0)) throw Error("score transform: zero probability");
    scores[j] = std::log(probs[j]);
    mean_log += scores[j];
  }
  mean_log /= static_cast<double>(k);
  const double scale = static_cast<double>(k) - 1.0;
  for (std::size_t j = 0; j < k; ++j) scores[j] = scale * (scores[j] - mean_log);
}

std::vector<double> weak_scores(std::span<const double> probs) {
  std::vector<double> scores(probs.size());
  weak_scores(probs, scores);
  return scores;
}

double weight_factor(std::span<const double> coding, std::span<const double> probs) {
  const double k = static_cast<double>(probs.size());
  double dot = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) dot += coding[j] * std::log(probs[j]);
  return std::exp(-(k - 1.0) / k * dot);
}

namespace {

// Log domain, so that many confident stages cannot underflow to zero before
// renormalization. `dots` holds sum_k y_k log p_k per sample.
std::vector<double> apply_log_factors(std::span<const double> weights,
                                      std::span<const double> dots, double k) {
  const std::size_t n = weights.size();
  std::vector<double> log_w(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_w[i] = std::log(weights[i]) - (k - 1.0) / k * dots[i];
    if (std::isnan(log_w[i]) || log_w[i] == std::numeric_limits<double>::infinity()) {
      throw Error("weight update: nonfinite factor (unclamped probability?)");
    }
    max_log = std::max(max_log, log_w[i]);
  }
  if (!std::isfinite(max_log)) throw Error("weight update: all weights vanished");
  std::vector<double> out(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(log_w[i] - max_log);
    total += out[i];
  }
  constexpr double kFloor = std::numeric_limits<double>::min();
  for (double& w : out) w = std::max(w / total, kFloor);
  return out;
}

}  // namespace

std::vector<double> update_weights(std::span<const double> weights,
                                   const Matrix& codings, const Matrix& probs) {
  const std::size_t n = weights.size();
  if (codings.rows() != n || probs.rows() != n || codings.cols() != probs.cols()) {
    throw Error("weight update: length mismatch");
  }
  std::vector<double> dots(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = codings.row(i);
    const auto p = probs.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) dots[i] += y[j] * std::log(p[j]);
  }
  return apply_log_factors(weights, dots, static_cast<double>(probs.cols()));
}

std::vector<std::size_t> qws_trim_sample(std::span<const double> weights,
                                         const PoolSamplingOptions& options,
                                         std::uint64_t seed) {
  if (!(options.pool_fraction > 0.0 && options.pool_fraction <= 1.0)) {
    throw Error("pool fraction must be in (0, 1]");
  }
  const std::size_t n_all = weights.size();
  if (n_all == 0) throw Error("pool sampling: no samples");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("pool sampling: invalid weight");
    total += w;
  }
  if (!(total > 0.0)) throw Error("pool sampling: all weights trimmed (weight collapse)");

  std::vector<std::size_t> order(n_all);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] < weights[b]; });
  std::vector<bool> keep(n_all, true);
  double trimmed = 0.0;
  const double budget = options.trim_mass * total;
  for (std::size_t idx : order) {
    if (trimmed + weights[idx] > budget) break;
    trimmed += weights[idx];
    keep[idx] = false;
  }
  for (std::size_t i = 0; i < n_all; ++i) {
    if (weights[i] == 0.0) keep[i] = false;
  }
  double kept_mass = 0.0;
  for (std::size_t i = 0; i < n_all; ++i) {
    if (keep[i]) kept_mass += weights[i];
  }
  if (!(kept_mass > 0.0)) throw Error("pool sampling: all weights trimmed (weight collapse)");

  const auto n = static_cast<std::size_t>(std::max<double>(
      1.0, std::round(options.pool_fraction * static_cast<double>(n_all))));
  std::vector<std::size_t> copies(n_all, 0);
  std::vector<double> residual(n_all, 0.0);
  std::size_t assigned = 0;
  double residual_total = 0.0;
  for (std::size_t i = 0; i < n_all; ++i) {
    if (!keep[i]) continue;
    const double expected = static_cast<double>(n) * weights[i] / kept_mass;
    copies[i] = static_cast<std::size_t>(std::floor(expected));
    residual[i] = expected - static_cast<double>(copies[i]);
    assigned += copies[i];
    residual_total += residual[i];
  }
  // Rounding can push the deterministic part one past n.
  while (assigned > n) {
    std::size_t heaviest = 0;
    for (std::size_t i = 1; i < n_all; ++i) {
      if (copies[i] > copies[heaviest]) heaviest = i;
    }
    --copies[heaviest];
    --assigned;
  }
  const std::size_t remaining = n - assigned;
  if (remaining > 0) {
    if (!(residual_total > 0.0)) {
      // All mass was integral up to rounding; spread over survivors in order.
      for (std::size_t i = 0, left = remaining; left > 0; i = (i + 1) % n_all) {
        if (keep[i]) {
          ++copies[i];
          --left;
        }
      }
    } else {
      std::mt19937_64 rng(seed);
      const double step = residual_total / static_cast<double>(remaining);
      std::uniform_real_distribution<double> start(0.0, step);
      double pointer = start(rng);
      double cumulative = 0.0;
      std::size_t picked = 0;
      std::size_t last_kept = 0;
      for (std::size_t i = 0; i < n_all && picked < remaining; ++i) {
        if (!keep[i]) continue;
        last_kept = i;
        cumulative += residual[i];
        while (picked < remaining && pointer < cumulative) {
          ++copies[i];
          ++picked;
          pointer += step;
        }
      }
      for (; picked < remaining; ++picked) ++copies[last_kept];
    }
  }

  std::vector<std::size_t> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n_all; ++i) pool.insert(pool.end(), copies[i], i);
  return pool;
}

int default_subset_size(std::size_t dim) {
  return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim)))));
}

std::vector<int> select_feature_subset(const Matrix& x, std::span<const int> labels,
                                       std::span<const double> weights,
                                       int num_classes, const SubsetOptions& options,
                                       std::uint64_t seed) {
  const std::size_t dim = x.cols();
  if (dim < 4) throw Error("feature subset selection needs D >= 4");
  const int size = options.subset_size > 0 ? options.subset_size : default_subset_size(dim);
  const int candidates = options.candidates > 0 ? options.candidates : default_subset_size(dim);
  if (static_cast<std::size_t>(size) > dim) throw Error("feature subset larger than D");

  std::mt19937_64 rng(seed);
  std::vector<int> dims(dim);
  std::vector<int> best;
  double best_score = -1.0;
  const TreeParams probe{options.probe_depth, 0.0};
  for (int c = 0; c < candidates; ++c) {
    std::iota(dims.begin(), dims.end(), 0);
    for (int j = 0; j < size; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, dim - 1);
      std::swap(dims[j], dims[pick(rng)]);
    }
    std::vector<int> subset(dims.begin(), dims.begin() + size);
    const Matrix projected = x.gather_cols(subset);
    const DecisionTree tree = fit_tree(projected, labels, weights, num_classes, probe);
    double correct = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < projected.rows(); ++i) {
      total += weights[i];
      if (static_cast<int>(argmax(tree.predict_proba(projected.row(i)))) == labels[i]) {
        correct += weights[i];
      }
    }
    const double score = total > 0.0 ? correct / total : 0.0;
    if (score > best_score) {
      best_score = score;
      best = std::move(subset);
    }
  }
  return best;
}

WeakClassifier make_weak_classifier(std::vector<int> features, DecisionTree tree) {
  WeakClassifier weak;
  weak.features = std::move(features);
  const std::size_t k = tree.num_classes();
  weak.leaf_scores.resize(tree.num_leaves() * k);
  for (std::size_t l = 0; l < tree.num_leaves(); ++l) {
    weak_scores(tree.leaf_probs(static_cast<int>(l)),
                std::span<double>(weak.leaf_scores.data() + l * k, k));
  }
  weak.tree = std::move(tree);
  return weak;
}

StoppingStage make_stopping_stage(DecisionTree tree) {
  StoppingStage stage;
  stage.leaf_max.resize(tree.num_leaves());
  for (std::size_t l = 0; l < tree.num_leaves(); ++l) {
    const auto p = tree.leaf_probs(static_cast<int>(l));
    stage.leaf_max[l] = *std::max_element(p.begin(), p.end());
  }
  stage.max_confidence =
      stage.leaf_max.empty() ? 0.0 : *std::max_element(stage.leaf_max.begin(), stage.leaf_max.end());
  stage.tree = std::move(tree);
  return stage;
}

Ensemble fit_adaboost(const Matrix& samples, std::span<const int> labels,
                      int num_classes, const BoostConfig& config,
                      const StageCallback& on_stage) {
  const std::size_t n = samples.rows();
  if (num_classes < 2) throw Error("boosting needs K >= 2");
  if (config.stages < 1) throw Error("boosting needs at least one stage");
  if (labels.size() != n) throw Error("boosting: samples and labels differ in length");
  if (n < static_cast<std::size_t>(num_classes)) {
    throw Error("boosting needs at least K samples");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw Error("label " + std::to_string(y) + " out of range [0," +
                  std::to_string(num_classes) + ")");
    }
  }
  const auto k = static_cast<std::size_t>(num_classes);
  const double km1 = static_cast<double>(num_classes - 1);

  Ensemble ensemble;
  ensemble.num_classes = num_classes;
  ensemble.dim = static_cast<int>(samples.cols());
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  // Only needed for the per-stage training accuracy.
  Matrix cumulative(on_stage ? n : 0, k);
  std::vector<double> dots(n);

  for (int m = 0; m < config.stages; ++m) {
    const std::uint64_t stage_seed = mix_seed(config.seed, static_cast<std::uint64_t>(m));
    const auto pool = qws_trim_sample(weights, config.pool, mix_seed(stage_seed, 0));
    const Matrix pool_x = samples.gather_rows(pool);
    std::vector<int> pool_labels(pool.size());
    std::vector<double> pool_weights(pool.size());
    double pool_total = 0.0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      pool_labels[j] = labels[pool[j]];
      pool_weights[j] = weights[pool[j]];
      pool_total += pool_weights[j];
    }
    for (double& w : pool_weights) w /= pool_total;

    std::vector<int> subset = select_feature_subset(
        pool_x, pool_labels, pool_weights, num_classes, config.subset,
        mix_seed(stage_seed, 1));
    DecisionTree tree =
        fit_tree(pool_x.gather_cols(subset), pool_labels, pool_weights, num_classes,
                 {config.max_depth, config.min_leaf_fraction});
    WeakClassifier weak = make_weak_classifier(std::move(subset), std::move(tree));

    // With the label coding, sum_k y_k log p_k reduces to
    // (K log p_y - sum_k log p_k) / (K - 1), so one log-sum per leaf suffices.
    std::vector<double> leaf_log_sum(weak.tree.num_leaves(), 0.0);
    for (std::size_t l = 0; l < leaf_log_sum.size(); ++l) {
      for (double p : weak.tree.leaf_probs(static_cast<int>(l))) leaf_log_sum[l] += std::log(p);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int leaf = weak.leaf_index(samples.row(i));
      const double log_py = std::log(weak.tree.leaf_probs(leaf)[labels[i]]);
      dots[i] = (static_cast<double>(k) * log_py - leaf_log_sum[leaf]) / km1;
      if (on_stage) {
        const auto s = weak.scores(leaf);
        auto acc = cumulative.row(i);
        for (std::size_t j = 0; j < k; ++j) acc[j] += s[j];
        if (static_cast<int>(argmax(acc)) == labels[i]) ++correct;
      }
    }
    weights = apply_log_factors(weights, dots, static_cast<double>(k));
    ensemble.weaks.push_back(std::move(weak));

    if (on_stage) {
      StageReport report;
      report.stage = m + 1;
      report.pool_size = pool.size();
      std::vector<std::size_t> distinct = pool;
      report.distinct_in_pool = static_cast<std::size_t>(
          std::unique(distinct.begin(), distinct.end()) - distinct.begin());
      report.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
      on_stage(report);
    }
  }
  return ensemble;
}

void accumulate_scores(const Ensemble& ensemble, std::span<const double> sample,
                       int stages, std::span<double> scores) {
  const auto k = static_cast<std::size_t>(ensemble.num_classes);
  for (int m = 0; m < stages; ++m) {
    const WeakClassifier& weak = ensemble.weaks[m];
    const double* s = weak.leaf_scores.data() + weak.leaf_index(sample) * k;
    for (std::size_t j = 0; j < k; ++j) scores[j] += s[j];
  }
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out[j] = std::exp(scores[j] - top);
    total += out[j];
  }
  for (double& p : out) p /= total;
  return out;
}

StrongPrediction predict_strong(const Ensemble& ensemble,
                                std::span<const double> sample) {
  if (static_cast<int>(sample.size()) != ensemble.dim) {
    throw Error("prediction: sample has " + std::to_string(sample.size()) +
                " dims, ensemble expects " + std::to_string(ensemble.dim));
  }
  StrongPrediction out;
  out.scores.assign(ensemble.num_classes, 0.0);
  accumulate_scores(ensemble, sample, ensemble.stages(), out.scores);
  out.probs = softmax(out.scores);
  return out;
}

}  // namespace featureless
