#include "featureless/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "featureless/descriptors.h"
#include "featureless/wald.h"

namespace featureless {
namespace {

using Clock = std::chrono::steady_clock;

struct PatchRef {
  int video = 0;
  PatchOrigin origin;
};

void append_origins(const Video& video, int video_index, const PipelineConfig& config,
                    std::vector<PatchRef>& out) {
  if (video.frames.empty()) throw Error("video " + video.id + " has no frames");
  const int depth = stack_depth(config);
  const int p = config.patch_size;
  const int stride = config.effective_stride();
  const int w = video.frames.front().width;
  const int h = video.frames.front().height;
  for (const Frame& f : video.frames) {
    if (f.width != w || f.height != h) throw Error("video " + video.id + ": mismatched frame sizes");
  }
  const int t_count = static_cast<int>(video.frames.size());
  if (t_count < depth) {
    throw Error("video " + video.id + " has " + std::to_string(t_count) +
                " frames, patches need " + std::to_string(depth));
  }
  if (w < p || h < p) throw Error("video " + video.id + ": frame smaller than patch");
  for (int t = 0; t + depth <= t_count; ++t) {
    for (int y = 0; y + p <= h; y += stride) {
      for (int x = 0; x + p <= w; x += stride) out.push_back({video_index, {t, x, y}});
    }
  }
}

void append_patch(const Video& video, const PatchRef& ref, const PipelineConfig& config,
                  bool with_descriptors, PatchSet& out) {
  const PatchGrid grid{config.patch_size, config.effective_stride(), stack_depth(config)};
  const std::vector<double> stack = extract_patch(video.frames, ref.origin, grid);
  const std::size_t frame_size = static_cast<std::size_t>(config.patch_size) * config.patch_size;
  const std::span<const double> all(stack);
  out.samples.append_row(
      l1_normalize(all.first(frame_size * static_cast<std::size_t>(config.temporal_depth))));
  if (with_descriptors) {
    const auto needed = frame_size * static_cast<std::size_t>(frames_required(config.descriptor));
    out.descriptors.append_row(
        compute_descriptor(config.descriptor, all.first(needed), config.patch_size).values);
  }
  out.video.push_back(ref.video);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool uses_codebook(EncodeMode mode) {
  return mode == EncodeMode::kBow || mode == EncodeMode::kCombined;
}

bool uses_mapper(EncodeMode mode) { return mode != EncodeMode::kBow; }

}  // namespace

VideoSet load_videos(const DatasetManifest& manifest) {
  VideoSet set;
  set.class_names = manifest.class_names;
  for (const ManifestEntry& entry : manifest.entries) {
    Video video;
    video.id = entry.video_id;
    video.label = entry.class_label;
    video.split = entry.split;
    video.frames = load_frames(entry.frame_dir);
    set.videos.push_back(std::move(video));
  }
  return set;
}

int stack_depth(const PipelineConfig& config) {
  return std::max(config.temporal_depth, frames_required(config.descriptor));
}

PatchSet extract_video_patches(const Video& video, int video_index,
                               const PipelineConfig& config, bool with_descriptors) {
  std::vector<PatchRef> refs;
  append_origins(video, video_index, config, refs);
  PatchSet out;
  for (const PatchRef& ref : refs) append_patch(video, ref, config, with_descriptors, out);
  return out;
}

PatchSet collect_patches(const VideoSet& videos, Split split,
                         const PipelineConfig& config, bool with_descriptors,
                         std::size_t max_patches, std::uint64_t seed) {
  std::vector<PatchRef> refs;
  for (std::size_t v = 0; v < videos.videos.size(); ++v) {
    if (videos.videos[v].split == split) {
      append_origins(videos.videos[v], static_cast<int>(v), config, refs);
    }
  }
  if (refs.empty()) throw Error("no videos in the requested split");
  if (refs.size() > max_patches) {
    std::vector<PatchRef> kept;
    kept.reserve(max_patches);
    std::mt19937_64 rng(seed);
    std::sample(refs.begin(), refs.end(), std::back_inserter(kept), max_patches, rng);
    refs = std::move(kept);
  }
  PatchSet out;
  for (const PatchRef& ref : refs) {
    append_patch(videos.videos[ref.video], ref, config, with_descriptors, out);
  }
  return out;
}

Codebook build_codebook(const PatchSet& training, const PipelineConfig& config) {
  if (training.descriptors.empty()) throw Error("codebook needs training descriptors");
  const Matrix* points = &training.descriptors;
  Matrix thinned;
  if (training.descriptors.rows() > config.max_descriptors) {
    std::vector<std::size_t> all(training.descriptors.rows());
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> kept;
    std::mt19937_64 rng(mix_seed(config.seed, 2));
    std::sample(all.begin(), all.end(), std::back_inserter(kept), config.max_descriptors, rng);
    thinned = training.descriptors.gather_rows(kept);
    points = &thinned;
  }
  KMeansOptions options;
  options.k = config.codebook_size;
  options.max_iters = config.kmeans_iters;
  options.seed = mix_seed(config.seed, 3);
  return kmeans_fit(*points, options, config.descriptor).codebook;
}

namespace {

// Whole videos go to validation whenever there is more than one; patches of a
// single video are strongly correlated, and a patch-level hold-out makes the
// stopping trees overconfident on unseen videos.
SplitIndices validation_split(const PatchSet& training, std::span<const int> labels,
                              double fraction, std::uint64_t seed) {
  const std::set<int> videos(training.video.begin(), training.video.end());
  if (videos.size() >= 2 && training.video.size() == labels.size()) {
    return grouped_split(training.video, fraction, seed);
  }
  return stratified_split(labels, fraction, seed);
}

}  // namespace

MapperData make_mapper_data(const PatchSet& training, const Codebook* codebook,
                            const PipelineConfig& config) {
  const std::size_t n = training.samples.rows();
  if (training.descriptors.rows() != n) throw Error("mapper data needs one descriptor per patch");
  const std::uint64_t split_seed = mix_seed(config.seed, 4);
  MapperData data;
  if (codebook != nullptr) {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = assign_codeword(*codebook, training.descriptors.row(i));
    }
    const SplitIndices split = validation_split(training, labels, config.validation_fraction,
                                                split_seed);
    data.train_samples = training.samples.gather_rows(split.train);
    data.validation_samples = training.samples.gather_rows(split.validation);
    for (std::size_t i : split.train) data.train_labels.push_back(labels[i]);
    for (std::size_t i : split.validation) data.validation_labels.push_back(labels[i]);
    data.num_labels = codebook->size();
    return data;
  }

  const std::vector<int> unlabeled(n, 0);
  const SplitIndices split =
      validation_split(training, unlabeled, config.validation_fraction, split_seed);
  data.train_samples = training.samples.gather_rows(split.train);
  data.validation_samples = training.samples.gather_rows(split.validation);
  data.train_labels = codebookless_labels(split.train.size());
  data.num_labels = static_cast<int>(split.train.size());
  for (std::size_t v : split.validation) {
    const auto d = training.descriptors.row(v);
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < split.train.size(); ++j) {
      const double dist = squared_distance(d, training.descriptors.row(split.train[j]));
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(j);
      }
    }
    data.validation_labels.push_back(best);
  }
  return data;
}

Ensemble train_mapper(const MapperData& data, const PipelineConfig& config,
                      const StageCallback& on_stage) {
  BoostConfig boost;
  boost.stages = config.stages;
  boost.max_depth = config.max_depth;
  boost.pool.pool_fraction = config.pool_fraction;
  boost.pool.trim_mass = config.trim_mass;
  boost.subset.subset_size = config.subset_size;
  boost.subset.candidates = config.subset_candidates;
  boost.subset.probe_depth = std::min(config.probe_depth, config.max_depth);
  boost.min_leaf_fraction = config.min_leaf_fraction;
  boost.seed = mix_seed(config.seed, 5);
  Ensemble ensemble =
      fit_adaboost(data.train_samples, data.train_labels, data.num_labels, boost, on_stage);
  ensemble = fit_stopping_trees(std::move(ensemble), data.validation_samples,
                                data.validation_labels,
                                {config.stop_max_depth, config.stop_min_leaf_fraction});
  ensemble.alpha = config.alpha;
  return ensemble;
}

LinearModel train_linear_mapper(const MapperData& data, const PipelineConfig& config) {
  LinearConfig linear;
  linear.epochs = config.mapper_svm_epochs;
  linear.lambda = config.mapper_svm_lambda;
  linear.seed = mix_seed(config.seed, 6);
  linear.standardize = true;
  return fit_linear_ovr(data.train_samples, data.train_labels, data.num_labels, linear);
}

std::string_view to_string(EncodeMode mode) {
  switch (mode) {
    case EncodeMode::kBow: return "bow";
    case EncodeMode::kFeatureless: return "featureless";
    case EncodeMode::kCodebookless: return "codebookless";
    case EncodeMode::kCombined: return "combined";
  }
  return "?";
}

EncodeMode parse_encode_mode(std::string_view name) {
  if (name == "bow") return EncodeMode::kBow;
  if (name == "featureless") return EncodeMode::kFeatureless;
  if (name == "codebookless") return EncodeMode::kCodebookless;
  if (name == "combined") return EncodeMode::kCombined;
  throw Error("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(MapperKind kind) {
  switch (kind) {
    case MapperKind::kWaldboost: return "waldboost";
    case MapperKind::kAdaboost: return "adaboost";
    case MapperKind::kLinear: return "linear";
  }
  return "?";
}

MapperKind parse_mapper_kind(std::string_view name) {
  if (name == "waldboost") return MapperKind::kWaldboost;
  if (name == "adaboost") return MapperKind::kAdaboost;
  if (name == "linear") return MapperKind::kLinear;
  throw Error("unknown mapper '" + std::string(name) + "'");
}

std::size_t EncodeStats::distinct_labels() const {
  return static_cast<std::size_t>(
      std::count_if(label_counts.begin(), label_counts.end(),
                    [](std::size_t c) { return c > 0; }));
}

std::vector<HistogramRow> encode_videos(const VideoSet& videos,
                                        std::optional<Split> split,
                                        const ModelContainer& model,
                                        const PipelineConfig& config,
                                        const EncodeOptions& options,
                                        EncodeStats* stats) {
  const bool need_codebook = uses_codebook(options.mode);
  const bool need_mapper = uses_mapper(options.mode);
  if (need_codebook && !model.codebook) throw Error("codebook required");
  if (need_mapper) {
    const bool linear = options.mapper == MapperKind::kLinear;
    if (linear ? !model.linear_mapper : !model.mapper) throw Error("mapper model required");
    if (options.mapper == MapperKind::kWaldboost && !model.mapper->has_stopping()) {
      throw Error("mapper has no stopping stages");
    }
    if ((options.mode == EncodeMode::kCodebookless) != config.codebookless) {
      throw Error(options.mode == EncodeMode::kCodebookless
                      ? "codebookless mode needs a mapper trained with codebookless=true"
                      : "a codebookless mapper can only encode in codebookless mode");
    }
  }
  if (need_codebook && model.codebook->kind != config.descriptor) {
    throw Error("codebook descriptor differs from the config");
  }

  const int mapper_bins =
      !need_mapper ? 0
      : options.mapper == MapperKind::kLinear ? model.linear_mapper->num_classes
                                              : model.mapper->num_classes;
  EncodeStats local;
  EncodeStats& st = stats != nullptr ? *stats : local;
  st = EncodeStats{};
  st.label_counts.assign(mapper_bins, 0);
  std::vector<double> scratch(mapper_bins);

  std::vector<HistogramRow> rows;
  for (std::size_t v = 0; v < videos.videos.size(); ++v) {
    const Video& video = videos.videos[v];
    if (split && video.split != *split) continue;
    const PatchSet patches =
        extract_video_patches(video, static_cast<int>(v), config, need_codebook);
    const std::size_t n = patches.samples.rows();
    st.patches += need_mapper ? n : 0;
    st.frames += video.frames.size() - static_cast<std::size_t>(stack_depth(config)) + 1;

    BowHistogram codebook_hist;
    if (need_codebook) {
      std::vector<int> words(n);
      for (std::size_t i = 0; i < n; ++i) {
        words[i] = assign_codeword(*model.codebook, patches.descriptors.row(i));
      }
      codebook_hist = bow_aggregate(words, model.codebook->size(), true, video.id);
    }
    BowHistogram mapper_hist;
    if (need_mapper) {
      std::vector<int> words(n);
      const auto start = Clock::now();
      for (std::size_t i = 0; i < n; ++i) {
        const auto x = patches.samples.row(i);
        switch (options.mapper) {
          case MapperKind::kWaldboost: {
            const EarlyExitResult r = predict_early_exit(*model.mapper, x, options.alpha, scratch);
            words[i] = r.predicted_class;
            st.stages_sum += r.stages_evaluated;
            break;
          }
          case MapperKind::kAdaboost:
            std::fill(scratch.begin(), scratch.end(), 0.0);
            accumulate_scores(*model.mapper, x, model.mapper->stages(), scratch);
            words[i] = static_cast<int>(argmax(scratch));
            st.stages_sum += model.mapper->stages();
            break;
          case MapperKind::kLinear:
            words[i] = predict_class(*model.linear_mapper, x);
            break;
        }
      }
      st.mapper_seconds += std::chrono::duration<double>(Clock::now() - start).count();
      for (int w : words) ++st.label_counts[w];
      mapper_hist = bow_aggregate(words, mapper_bins, true, video.id);
    }

    HistogramRow row;
    row.video_id = video.id;
    row.label = video.label;
    if (options.mode == EncodeMode::kCombined) {
      row.values = concat_representations(codebook_hist, mapper_hist);
    } else {
      row.values = need_codebook ? codebook_hist.counts : mapper_hist.counts;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("no videos to encode");
  return rows;
}

Matrix rows_to_matrix(std::span<const HistogramRow> rows) {
  Matrix x;
  for (const HistogramRow& row : rows) x.append_row(row.values);
  return x;
}

std::vector<int> rows_to_labels(std::span<const HistogramRow> rows) {
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const HistogramRow& row : rows) labels.push_back(row.label);
  return labels;
}

LinearModel train_svm(std::span<const HistogramRow> rows, int num_classes,
                      const PipelineConfig& config) {
  LinearConfig linear;
  linear.epochs = config.svm_epochs;
  linear.lambda = config.svm_lambda;
  linear.seed = mix_seed(config.seed, 7);
  return fit_linear_ovr(rows_to_matrix(rows), rows_to_labels(rows), num_classes, linear);
}

EvaluationReport evaluate_rows(const LinearModel& svm, std::span<const HistogramRow> rows) {
  return evaluate_map(svm, rows_to_matrix(rows), rows_to_labels(rows));
}

std::string format_report(const EvaluationReport& report,
                          std::span<const std::string> class_names) {
  std::string out;
  char line[256];
  for (std::size_t c = 0; c < report.per_class_ap.size(); ++c) {
    const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    if (std::isnan(report.per_class_ap[c])) {
      std::snprintf(line, sizeof line, "ap %s nan\n", name.c_str());
    } else {
      std::snprintf(line, sizeof line, "ap %s %.6f\n", name.c_str(), report.per_class_ap[c]);
    }
    out += line;
  }
  std::snprintf(line, sizeof line, "map %.6f\naccuracy %.6f\n", report.map, report.accuracy);
  out += line;
  return out;
}

ModelContainer train_model(const VideoSet& videos, const PipelineConfig& base,
                           const EncodeOptions& options, const StageCallback& on_stage) {
  PipelineConfig config = base;
  config.codebookless = options.mode == EncodeMode::kCodebookless;
  config.validate();

  ModelContainer model;
  model.class_names = videos.class_names;
  const PatchSet training = collect_patches(videos, Split::kTrain, config, true,
                                            config.max_train_patches, mix_seed(config.seed, 1));
  if (!config.codebookless) model.codebook = build_codebook(training, config);
  if (uses_mapper(options.mode)) {
    const MapperData data =
        make_mapper_data(training, model.codebook ? &*model.codebook : nullptr, config);
    if (options.mapper == MapperKind::kLinear) {
      model.linear_mapper = train_linear_mapper(data, config);
    } else {
      model.mapper = train_mapper(data, config, on_stage);
    }
  }
  model.config_text = config.to_text();
  return model;
}

RunResult run_pipeline(const VideoSet& videos, const PipelineConfig& base,
                       const EncodeOptions& options, const StageCallback& on_stage) {
  RunResult result;
  result.model = train_model(videos, base, options, on_stage);
  const PipelineConfig config = parse_config(result.model.config_text);
  result.train_rows = encode_videos(videos, Split::kTrain, result.model, config, options);
  result.model.svm = train_svm(result.train_rows, videos.num_classes(), config);
  result.model.svm_mode = std::string(to_string(options.mode));
  result.test_rows =
      encode_videos(videos, Split::kTest, result.model, config, options, &result.test_stats);
  result.report = evaluate_rows(*result.model.svm, result.test_rows);
  return result;
}

std::vector<BenchRow> run_bench(const VideoSet& videos, const ModelContainer& model,
                                const PipelineConfig& config,
                                std::span<const double> alphas, int repeats) {
  if (!model.mapper) throw Error("mapper model required");
  if (!model.mapper->has_stopping()) throw Error("mapper has no stopping stages");
  if (repeats < 1) throw Error("bench needs at least one repeat");
  EncodeOptions options;
  options.mode = config.codebookless ? EncodeMode::kCodebookless : EncodeMode::kFeatureless;
  const bool with_map = model.svm && model.svm_mode == to_string(options.mode);

  auto best_run = [&](const EncodeOptions& opts, EncodeStats& stats) {
    std::vector<HistogramRow> rows;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
      rows = encode_videos(videos, Split::kTest, model, config, opts, &stats);
      best = std::min(best, stats.mapper_seconds);
    }
    stats.mapper_seconds = best;
    return rows;
  };

  EncodeOptions full = options;
  full.mapper = MapperKind::kAdaboost;
  EncodeStats full_stats;
  best_run(full, full_stats);

  std::vector<BenchRow> out;
  for (double alpha : alphas) {
    EncodeOptions early = options;
    early.alpha = alpha;
    EncodeStats stats;
    const std::vector<HistogramRow> rows = best_run(early, stats);
    BenchRow row;
    row.alpha = alpha;
    row.mean_stages = stats.mean_stages();
    row.time_per_frame_s = stats.mapper_seconds / static_cast<double>(stats.frames);
    row.speedup = stats.mapper_seconds > 0.0 ? full_stats.mapper_seconds / stats.mapper_seconds
                                             : std::numeric_limits<double>::quiet_NaN();
    if (with_map) {
      const EvaluationReport report = evaluate_rows(*model.svm, rows);
      row.map = report.map;
      row.accuracy = report.accuracy;
    } else {
      row.map = row.accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace featureless
