#ifndef FEATURELESS_CODEBOOK_H_
#define FEATURELESS_CODEBOOK_H_

#include <cstdint>
#include <span>
#include <vector>

#include "featureless/common.h"
#include "featureless/descriptors.h"

namespace featureless {

// K centers in descriptor space. Row i of `centers` is codeword i.
struct Codebook {
  Matrix centers;
  DescriptorKind kind = DescriptorKind::kHog;

  int size() const { return static_cast<int>(centers.rows()); }
  std::size_t dim() const { return centers.cols(); }
  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct KMeansOptions {
  int k = 100;
  int max_iters = 50;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Codebook codebook;
  // Within-cluster sum of squared distances after each assignment step.
  std::vector<double> distortion;
  std::vector<int> assignments;
  int iterations = 0;
};

// Lloyd iterations from k-means++ seeding. Empty clusters move to the point
// farthest from its assigned center.
KMeansResult kmeans_fit(const Matrix& points, const KMeansOptions& options,
                        DescriptorKind kind = DescriptorKind::kHog);

std::size_t count_distinct_rows(const Matrix& points);

// Nearest center by squared Euclidean distance, lowest index on ties.
int assign_codeword(const Codebook& codebook, std::span<const double> d);

// Codebookless labeling: sample i is its own class i.
std::vector<int> codebookless_labels(std::size_t num_samples);

}  // namespace featureless

#endif  // FEATURELESS_CODEBOOK_H_
