#include "featureless/classify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>

namespace featureless {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Pegasos on the bias-augmented problem; returns dim + 1 weights with the
// bias last.
std::vector<double> pegasos_binary(const Matrix& x, std::span<const int> labels,
                                   int positive, const LinearConfig& config,
                                   std::uint64_t seed) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> w(d + 1, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  const double radius = 1.0 / std::sqrt(config.lambda);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      const double y = labels[i] == positive ? 1.0 : -1.0;
      const auto xi = x.row(i);
      const double margin = y * (dot(std::span<const double>(w).first(d), xi) + w[d]);
      const double shrink = 1.0 - eta * config.lambda;
      for (double& v : w) v *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * y * xi[j];
        w[d] += eta * y;
      }
      const double norm = std::sqrt(dot(w, w));
      if (norm > radius) {
        const double s = radius / norm;
        for (double& v : w) v *= s;
      }
    }
  }
  return w;
}

std::vector<double> standardized(const LinearModel& model, std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  if (model.feature_mean.empty()) return out;
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = (out[j] - model.feature_mean[j]) * model.feature_scale[j];
  }
  return out;
}

}  // namespace

LinearModel fit_linear_ovr(const Matrix& x, std::span<const int> labels,
                           int num_classes, const LinearConfig& config) {
  if (x.rows() == 0) throw Error("linear model: no training data");
  if (labels.size() != x.rows()) throw Error("linear model: dimension mismatch between data and labels");
  if (num_classes < 2) throw Error("linear model needs at least 2 classes");
  if (!(config.lambda > 0.0) || config.epochs < 1) throw Error("linear model: bad config");
  std::vector<bool> present(num_classes, false);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw Error("linear model: label out of range");
    present[y] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw Error("linear model: training data has a single class");
  }

  LinearModel model;
  model.num_classes = num_classes;
  model.dim = static_cast<int>(x.cols());
  model.config = config;
  const Matrix* data = &x;
  Matrix scaled;
  if (config.standardize) {
    const std::size_t d = x.cols();
    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 1.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < d; ++j) model.feature_mean[j] += x(i, j);
    }
    for (double& m : model.feature_mean) m /= static_cast<double>(x.rows());
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double c = x(i, j) - model.feature_mean[j];
        var[j] += c * c;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(x.rows()));
      model.feature_scale[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
    scaled = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto r = scaled.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        r[j] = (r[j] - model.feature_mean[j]) * model.feature_scale[j];
      }
    }
    data = &scaled;
  }

  model.weights = Matrix(num_classes, x.cols());
  model.biases.assign(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const std::vector<double> w =
        pegasos_binary(*data, labels, c, config, mix_seed(config.seed, c));
    std::copy(w.begin(), w.end() - 1, model.weights.row(c).begin());
    model.biases[c] = w.back();
  }
  return model;
}

std::vector<double> predict_margin(const LinearModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim) {
    throw Error("linear model: dimension mismatch (" + std::to_string(x.size()) +
                " vs " + std::to_string(model.dim) + ")");
  }
  const std::vector<double> z = standardized(model, x);
  std::vector<double> out(model.num_classes);
  for (int c = 0; c < model.num_classes; ++c) {
    out[c] = dot(model.weights.row(c), z) + model.biases[c];
  }
  return out;
}

int predict_class(const LinearModel& model, std::span<const double> x) {
  return static_cast<int>(argmax(predict_margin(model, x)));
}

double average_precision(std::span<const double> scores,
                         std::span<const bool> is_positive) {
  if (scores.size() != is_positive.size()) throw Error("average precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (is_positive[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw Error("average precision undefined without positives");
  return sum / static_cast<double>(hits);
}

double mean_average_precision(std::span<const double> per_class_ap) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double ap : per_class_ap) {
    if (std::isnan(ap)) continue;
    sum += ap;
    ++count;
  }
  if (count == 0) throw Error("mean average precision needs at least one class with positives");
  return sum / static_cast<double>(count);
}

EvaluationReport evaluate_map(const LinearModel& model, const Matrix& x,
                              std::span<const int> labels) {
  if (labels.size() != x.rows()) throw Error("evaluation: dimension mismatch");
  if (x.rows() == 0) throw Error("evaluation: no test items");
  const std::size_t n = x.rows();
  Matrix margins(n, model.num_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = predict_margin(model, x.row(i));
    std::copy(m.begin(), m.end(), margins.row(i).begin());
    if (static_cast<int>(argmax(m)) == labels[i]) ++correct;
  }
  EvaluationReport report;
  report.per_class_ap.assign(model.num_classes, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> column(n);
  std::unique_ptr<bool[]> positive(new bool[n]);
  for (int c = 0; c < model.num_classes; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = margins(i, c);
      positive[i] = labels[i] == c;
      any = any || positive[i];
    }
    if (any) report.per_class_ap[c] = average_precision(column, {positive.get(), n});
  }
  report.map = mean_average_precision(report.per_class_ap);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return report;
}

}  // namespace featureless
