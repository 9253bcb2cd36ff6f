#include "featureless/codebook.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace featureless {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

int nearest_center(const Matrix& centers, std::span<const double> x,
                   double* best_distance) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(centers.row(c), x);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (best_distance != nullptr) *best_distance = best_d;
  return best;
}

Matrix kmeans_plus_plus(const Matrix& points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centers(0, points.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.append_row(points.row(first(rng)));
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) {
    closest[i] = squared_distance(points.row(i), centers.row(0));
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centers.rows()) < k) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        running += closest[i];
        if (closest[i] > 0.0 && running > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Rounding left the target past the last positive weight.
        for (std::size_t i = n; i-- > 0;) {
          if (closest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    centers.append_row(points.row(pick));
    const auto added = centers.row(centers.rows() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], squared_distance(points.row(i), added));
    }
  }
  return centers;
}

}  // namespace

std::size_t count_distinct_rows(const Matrix& points) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a);
    const auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

KMeansResult kmeans_fit(const Matrix& points, const KMeansOptions& options,
                        DescriptorKind kind) {
  if (options.k < 2) throw Error("k-means needs k >= 2");
  if (options.max_iters < 1) throw Error("k-means needs max_iters >= 1");
  const std::size_t distinct = count_distinct_rows(points);
  if (static_cast<std::size_t>(options.k) > distinct) {
    throw Error("k-means: k=" + std::to_string(options.k) + " exceeds " +
                std::to_string(distinct) + " distinct points");
  }

  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  const auto k = static_cast<std::size_t>(options.k);
  std::mt19937_64 rng(options.seed);

  KMeansResult result;
  result.codebook.kind = kind;
  result.codebook.centers = kmeans_plus_plus(points, options.k, rng);
  Matrix& centers = result.codebook.centers;
  result.assignments.assign(n, -1);
  std::vector<double> dist(n);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    bool changed = false;
    double distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest_center(centers, points.row(i), &dist[i]);
      if (c != result.assignments[i]) {
        result.assignments[i] = c;
        changed = true;
      }
      distortion += dist[i];
    }
    result.distortion.push_back(distortion);
    result.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignments[i]);
      auto s = sums.row(c);
      const auto x = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
      ++counts[c];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      auto center = centers.row(c);
      if (counts[c] > 0) {
        const auto s = sums.row(c);
        for (std::size_t j = 0; j < dim; ++j) {
          center[j] = s[j] / static_cast<double>(counts[c]);
        }
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      taken[far] = true;
      const auto x = points.row(far);
      std::copy(x.begin(), x.end(), center.begin());
    }
  }
  return result;
}

int assign_codeword(const Codebook& codebook, std::span<const double> d) {
  if (d.size() != codebook.dim()) {
    throw Error("codeword assignment: descriptor has " + std::to_string(d.size()) +
                " dims, codebook has " + std::to_string(codebook.dim()));
  }
  return nearest_center(codebook.centers, d, nullptr);
}

std::vector<int> codebookless_labels(std::size_t num_samples) {
  if (num_samples == 0) throw Error("codebookless labeling needs samples");
  if (num_samples < 2) throw Error("codebookless labeling needs at least 2 samples (K >= 2)");
  std::vector<int> labels(num_samples);
  std::iota(labels.begin(), labels.end(), 0);
  return labels;
}

}  // namespace featureless
