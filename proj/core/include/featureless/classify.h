#ifndef FEATURELESS_CLASSIFY_H_
#define FEATURELESS_CLASSIFY_H_

// One-vs-rest linear SVM trained by Pegasos-style stochastic subgradient
// descent, plus average precision / MAP evaluation.

#include <cstdint>
#include <span>
#include <vector>

#include "featureless/common.h"

namespace featureless {

struct LinearConfig {
  int epochs = 50;
  double lambda = 1e-4;
  std::uint64_t seed = 7;
  // Inputs are z-scored with statistics of the training set before fitting.
  bool standardize = false;

  friend bool operator==(const LinearConfig&, const LinearConfig&) = default;
};

struct LinearModel {
  int num_classes = 0;
  int dim = 0;
  Matrix weights;               // num_classes x dim
  std::vector<double> biases;   // num_classes
  // Empty unless the config asked for standardization.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  LinearConfig config;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

LinearModel fit_linear_ovr(const Matrix& x, std::span<const int> labels,
                           int num_classes, const LinearConfig& config = {});

// w_c . x + b_c per class (after standardization when the model has it).
std::vector<double> predict_margin(const LinearModel& model, std::span<const double> x);
int predict_class(const LinearModel& model, std::span<const double> x);

// Mean over positive ranks of the precision at that rank. Items are ranked
// by descending score with ties kept in input order.
double average_precision(std::span<const double> scores,
                         std::span<const bool> is_positive);
double mean_average_precision(std::span<const double> per_class_ap);

struct EvaluationReport {
  std::vector<double> per_class_ap;  // NaN for classes without positives
  double map = 0.0;
  double accuracy = 0.0;
};

// One-vs-rest AP per class over the margin of that class. Classes without a
// positive test item are skipped in the mean.
EvaluationReport evaluate_map(const LinearModel& model, const Matrix& x,
                              std::span<const int> labels);

}  // namespace featureless

#endif  // FEATURELESS_CLASSIFY_H_
