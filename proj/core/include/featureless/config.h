#ifndef FEATURELESS_CONFIG_H_
#define FEATURELESS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "featureless/descriptors.h"

namespace featureless {

// Every knob of the pipeline. Defaults are the full-scale setup:
// 24x24 patches, 100-word codebooks over up to 100,000 descriptors, 1000
// boosting stages on round(sqrt(D)) = 24 dimensions, depth-15 trees, a tenth
// of the data per stage and alpha = 0.97.
struct PipelineConfig {
  // Patches.
  int patch_size = 24;
  int stride = 0;  // 0 -> patch_size (dense, non-overlapping)
  int temporal_depth = 1;
  std::size_t max_train_patches = 100000;

  // Labels.
  DescriptorKind descriptor = DescriptorKind::kHog;
  int codebook_size = 100;  // 1000 is the usual choice for hof3d
  bool codebookless = false;
  std::size_t max_descriptors = 100000;
  int kmeans_iters = 50;

  // Boosting.
  int stages = 1000;
  int subset_size = 0;        // 0 -> round(sqrt(D))
  int subset_candidates = 0;  // 0 -> round(sqrt(D))
  int probe_depth = 3;
  int max_depth = 15;
  double pool_fraction = 0.1;
  double trim_mass = 0.01;
  double min_leaf_fraction = 1e-6;

  // Early exit.
  double validation_fraction = 0.1;
  int stop_max_depth = 15;
  double stop_min_leaf_fraction = 1e-6;
  double alpha = 0.97;

  // Video classifier and raw-patch linear mapper.
  double svm_lambda = 1e-4;
  int svm_epochs = 50;
  double mapper_svm_lambda = 1e-4;
  int mapper_svm_epochs = 20;

  std::uint64_t seed = 1;

  int effective_stride() const { return stride > 0 ? stride : patch_size; }
  int sample_dim() const { return patch_size * patch_size * temporal_depth; }

  // Throws on out-of-range values or inconsistent combinations such as a
  // hof3d descriptor with temporal_depth != 9.
  void validate() const;

  // `key=value` lines; `#` starts a comment.
  std::string to_text() const;
  void set(std::string_view key, std::string_view value);
  void apply_text(const std::string& text);

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text);

}  // namespace featureless

#endif  // FEATURELESS_CONFIG_H_
