#ifndef FEATURELESS_PIPELINE_H_
#define FEATURELESS_PIPELINE_H_

// End-to-end video classification: training patches and their descriptor
// labels, the boosted patch-to-codeword mapper, per-video histograms and the
// video-level linear SVM.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featureless/boost.h"
#include "featureless/classify.h"
#include "featureless/codebook.h"
#include "featureless/config.h"
#include "featureless/encode.h"
#include "featureless/model_io.h"
#include "featureless/patchio.h"

namespace featureless {

struct Video {
  std::string id;
  int label = 0;
  Split split = Split::kTrain;
  std::vector<Frame> frames;
};

struct VideoSet {
  std::vector<Video> videos;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

VideoSet load_videos(const DatasetManifest& manifest);

// Frames spanned by one patch stack: enough for both the boosting sample and
// the descriptor.
int stack_depth(const PipelineConfig& config);

struct PatchSet {
  Matrix samples;      // L1-normalized raw patches, config.sample_dim() wide
  Matrix descriptors;  // empty unless requested
  std::vector<int> video;  // index into VideoSet::videos
};

PatchSet extract_video_patches(const Video& video, int video_index,
                               const PipelineConfig& config, bool with_descriptors);

// Patches of every video in `split`, randomly thinned to at most
// `max_patches` (order of the survivors is preserved).
PatchSet collect_patches(const VideoSet& videos, Split split,
                         const PipelineConfig& config, bool with_descriptors,
                         std::size_t max_patches, std::uint64_t seed);

Codebook build_codebook(const PatchSet& training, const PipelineConfig& config);

// Boosting data with its validation hold-out (whole videos when the patches
// come from several, else stratified by label). Labels are
// codewords, or patch ids when `codebook` is null (codebookless mode). In
// codebookless mode validation patches take the id of their nearest training
// descriptor.
struct MapperData {
  Matrix train_samples;
  std::vector<int> train_labels;
  Matrix validation_samples;
  std::vector<int> validation_labels;
  int num_labels = 0;
};

MapperData make_mapper_data(const PatchSet& training, const Codebook* codebook,
                            const PipelineConfig& config);

// Adaboost stages followed by the stopping trees.
Ensemble train_mapper(const MapperData& data, const PipelineConfig& config,
                      const StageCallback& on_stage = {});

// Raw-patch linear baseline predicting the same labels.
LinearModel train_linear_mapper(const MapperData& data, const PipelineConfig& config);

enum class EncodeMode { kBow, kFeatureless, kCodebookless, kCombined };
enum class MapperKind { kWaldboost, kAdaboost, kLinear };

std::string_view to_string(EncodeMode mode);
EncodeMode parse_encode_mode(std::string_view name);
std::string_view to_string(MapperKind kind);
MapperKind parse_mapper_kind(std::string_view name);

struct EncodeOptions {
  EncodeMode mode = EncodeMode::kBow;
  MapperKind mapper = MapperKind::kWaldboost;
  double alpha = 0.97;
};

struct EncodeStats {
  std::size_t patches = 0;
  std::size_t frames = 0;
  double stages_sum = 0.0;
  double mapper_seconds = 0.0;
  // How often the mapper predicted each label.
  std::vector<std::size_t> label_counts;

  double mean_stages() const {
    return patches == 0 ? 0.0 : stages_sum / static_cast<double>(patches);
  }
  std::size_t distinct_labels() const;
};

// One L1-normalized histogram row per video of `split` (all videos when
// unset). Throws "mapper model required" for mapper modes without a mapper.
std::vector<HistogramRow> encode_videos(const VideoSet& videos,
                                        std::optional<Split> split,
                                        const ModelContainer& model,
                                        const PipelineConfig& config,
                                        const EncodeOptions& options,
                                        EncodeStats* stats = nullptr);

Matrix rows_to_matrix(std::span<const HistogramRow> rows);
std::vector<int> rows_to_labels(std::span<const HistogramRow> rows);

LinearModel train_svm(std::span<const HistogramRow> rows, int num_classes,
                      const PipelineConfig& config);
EvaluationReport evaluate_rows(const LinearModel& svm, std::span<const HistogramRow> rows);

// Deterministic text: one `ap <class> <value>` line per class, then map and
// accuracy.
std::string format_report(const EvaluationReport& report,
                          std::span<const std::string> class_names);

// Trains whatever `options.mode` needs (codebook, mapper, linear mapper),
// encodes both splits and fits the SVM.
struct RunResult {
  ModelContainer model;
  std::vector<HistogramRow> train_rows;
  std::vector<HistogramRow> test_rows;
  EncodeStats test_stats;
  EvaluationReport report;
};

ModelContainer train_model(const VideoSet& videos, const PipelineConfig& config,
                           const EncodeOptions& options,
                           const StageCallback& on_stage = {});
RunResult run_pipeline(const VideoSet& videos, const PipelineConfig& config,
                       const EncodeOptions& options,
                       const StageCallback& on_stage = {});

struct BenchRow {
  double alpha = 0.0;
  double mean_stages = 0.0;
  double time_per_frame_s = 0.0;
  double speedup = 0.0;
  double map = 0.0;
  double accuracy = 0.0;
};

// Encodes the test videos with the early-exit mapper at every alpha and with
// the full ensemble; timings are the best of `repeats` passes. MAP uses the
// model's SVM.
std::vector<BenchRow> run_bench(const VideoSet& videos, const ModelContainer& model,
                                const PipelineConfig& config,
                                std::span<const double> alphas, int repeats = 3);

}  // namespace featureless

#endif  // FEATURELESS_PIPELINE_H_
