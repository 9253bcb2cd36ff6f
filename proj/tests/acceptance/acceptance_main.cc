// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "featureless/boost.h"
#include "featureless/codebook.h"
#include "featureless/model_io.h"
#include "featureless/pipeline.h"
#include "featureless/synthetic.h"
#include "featureless/wald.h"
#include "test_util.h"

namespace featureless {
namespace {

using testing::gaussian_blobs;
using testing::random_matrix;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Shared fixtures, built on first use.

// Video-level pipeline: 5 drifting-grating classes, 6 train and 6 test
// videos each.
PipelineConfig pipeline_config() {
  PipelineConfig c;
  c.stages = 200;
  c.stride = 12;
  c.max_depth = 8;
  c.codebook_size = 20;
  c.max_train_patches = 6000;
  c.validation_fraction = 0.2;
  c.stop_max_depth = 4;
  c.stop_min_leaf_fraction = 0.05;
  return c;
}

const VideoSet& pipeline_videos() {
  static const VideoSet set = generate_synthetic(SyntheticOptions{});
  return set;
}

const RunResult& pipeline_run(EncodeMode mode, MapperKind mapper) {
  static std::map<std::pair<EncodeMode, MapperKind>, RunResult> cache;
  const auto key = std::make_pair(mode, mapper);
  if (const auto it = cache.find(key); it != cache.end()) return it->second;
  const PipelineConfig c = pipeline_config();
  return cache.emplace(key, run_pipeline(pipeline_videos(), c, {mode, mapper, c.alpha}))
      .first->second;
}

// Patch-level mapper predicting the video class of each patch. Many short
// videos so that the held-out videos for the stopping trees are numerous.
struct PatchTask {
  Ensemble ensemble;
  Matrix test_samples;
  std::vector<int> test_labels;
  std::size_t train_patches = 0;
  double train_seconds = 0.0;
};

const PatchTask& patch_task() {
  static const PatchTask task = [] {
    const auto start = Clock::now();
    SyntheticOptions so;
    so.train_per_class = 30;
    so.num_frames = 3;
    const VideoSet videos = generate_synthetic(so);
    PipelineConfig c;
    c.stages = 200;
    c.stride = 12;
    c.max_depth = 8;
    c.pool_fraction = 0.2;
    c.validation_fraction = 0.33;
    c.stop_max_depth = 4;
    c.stop_min_leaf_fraction = 0.05;

    const PatchSet train = collect_patches(videos, Split::kTrain, c, false, 6000, 11);
    const PatchSet test = collect_patches(videos, Split::kTest, c, false, 2000, 12);
    const SplitIndices split = grouped_split(train.video, c.validation_fraction, 3);
    MapperData data;
    data.train_samples = train.samples.gather_rows(split.train);
    data.validation_samples = train.samples.gather_rows(split.validation);
    for (std::size_t i : split.train) data.train_labels.push_back(videos.videos[train.video[i]].label);
    for (std::size_t i : split.validation) {
      data.validation_labels.push_back(videos.videos[train.video[i]].label);
    }
    data.num_labels = videos.num_classes();

    PatchTask t;
    t.ensemble = train_mapper(data, c);
    t.test_samples = test.samples;
    for (int v : test.video) t.test_labels.push_back(videos.videos[v].label);
    t.train_patches = train.samples.rows();
    t.train_seconds = seconds_since(start);
    return t;
  }();
  return task;
}

// ---------------------------------------------------------------------------

Outcome equation_suite() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  double worst_coding = 0.0;
  for (int k = 2; k <= 12; ++k) {
    const Matrix codes = encode_labels(testing::random_labels(50, k, k), k);
    for (std::size_t i = 0; i < codes.rows(); ++i) {
      double total = 0.0;
      for (double v : codes.row(i)) total += v;
      worst_coding = std::max(worst_coding, std::abs(total));
    }
  }
  double worst_score = 0.0;
  double worst_softmax = 0.0;
  std::uniform_real_distribution<double> u(kLeafProbabilityFloor, 1.0);
  std::uniform_int_distribution<int> classes(2, 50);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> p(classes(rng));
    double total = 0.0;
    for (double& v : p) total += v = u(rng);
    for (double& v : p) v /= total;
    const auto s = weak_scores(p);
    double sum = 0.0;
    for (double v : s) sum += v;
    worst_score = std::max(worst_score, std::abs(sum));
    double soft = 0.0;
    for (double v : softmax(s)) soft += v;
    worst_softmax = std::max(worst_softmax, std::abs(soft - 1.0));
  }
  const std::vector<double> coding{1.0, -1.0};
  const std::vector<double> probs{0.9, 0.1};
  const double factor = weight_factor(coding, probs);
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = worst_coding < 1e-12 && worst_score <= 1e-8 && std::abs(factor - 1.0 / 3.0) <= 1e-9 &&
           worst_softmax <= 1e-9 && elapsed < 5.0;
  o.detail = fmt("coding sum %.1e, score sum %.1e, factor %.12f, softmax dev %.1e, %.2fs",
                 worst_coding, worst_score, factor, worst_softmax, elapsed);
  return o;
}

std::vector<double> recursive_tree(const DecisionTree& t, int node, std::span<const double> x) {
  const TreeNode& n = t.nodes()[node];
  if (n.is_leaf()) {
    const auto p = t.leaf_probs(n.leaf);
    return {p.begin(), p.end()};
  }
  return recursive_tree(t, x[n.feature] <= n.threshold ? n.left : n.right, x);
}

Outcome oracle_equivalence() {
  std::vector<int> y;
  const Matrix x = gaussian_blobs(4, 60, 12, 2.5, 21, y);
  BoostConfig bc;
  bc.stages = 20;
  bc.max_depth = 6;
  bc.pool.pool_fraction = 0.3;
  const Ensemble e = fit_adaboost(x, y, 4, bc);
  const Matrix probe = random_matrix(1000, 12, 22, -2.0, 4.0);
  double worst = 0.0;
  std::size_t tree_mismatches = 0;
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    std::vector<double> oracle(4, 0.0);
    for (const WeakClassifier& w : e.weaks) {
      std::vector<double> narrow;
      for (int f : w.features) narrow.push_back(probe(i, f));
      const auto p = recursive_tree(w.tree, 0, narrow);
      const auto direct = w.tree.predict_proba(narrow);
      if (!std::equal(p.begin(), p.end(), direct.begin(), direct.end())) ++tree_mismatches;
      const auto s = weak_scores(p);
      for (int k = 0; k < 4; ++k) oracle[k] += s[k];
    }
    const auto strong = predict_strong(e, probe.row(i));
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(strong.scores[k] - oracle[k]));
  }
  return {worst < 1e-8 && tree_mismatches == 0,
          fmt("max score diff %.2e over 1000 samples x 20 stages, %zu tree mismatches", worst,
              tree_mismatches)};
}

Outcome conservative_limit() {
  std::vector<int> y;
  const Matrix x = gaussian_blobs(5, 80, 10, 1.5, 31, y);
  BoostConfig bc;
  bc.stages = 30;
  bc.max_depth = 8;
  bc.pool.pool_fraction = 0.3;
  Ensemble e = fit_adaboost(x, y, 5, bc);
  std::vector<int> yv;
  const Matrix validation = gaussian_blobs(5, 40, 10, 1.5, 32, yv);
  e = fit_stopping_trees(std::move(e), validation, yv, {15, -1.0});
  const Matrix probe = random_matrix(5000, 10, 33, -2.0, 3.5);
  std::size_t agree = 0;
  std::size_t full_length = 0;
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    const auto early = predict_early_exit(e, probe.row(i), 1.0);
    agree += early.predicted_class == predict_strong(e, probe.row(i)).predicted_class();
    full_length += early.stages_evaluated == e.stages();
  }
  return {agree == probe.rows(),
          fmt("alpha=1: %zu/5000 classes agree, %zu/5000 ran all stages", agree, full_length)};
}

Outcome early_exit_tradeoff() {
  const auto start = Clock::now();
  const PatchTask& t = patch_task();
  const EvaluationStats s = evaluation_stats(t.ensemble, t.test_samples, 0.97, t.test_labels, 3);
  const double elapsed = seconds_since(start);
  const double gap = s.full_accuracy - s.early_accuracy;
  const int m = t.ensemble.stages();
  Outcome o;
  o.pass = t.train_patches >= 2000 && m == 200 && gap <= 0.02 && s.mean_stages <= 0.6 * m &&
           s.speedup_vs_full > 1.5 && elapsed < 300.0;
  o.detail = fmt("%zu train patches, M=%d, alpha=0.97: accuracy %.3f vs full %.3f (gap %.1f pp), "
                 "mean stages %.1f, speedup %.2fx, %.0fs",
                 t.train_patches, m, s.early_accuracy, s.full_accuracy, 100.0 * gap,
                 s.mean_stages, s.speedup_vs_full, elapsed);
  return o;
}

Outcome mapper_vs_linear() {
  const double boosted = pipeline_run(EncodeMode::kFeatureless, MapperKind::kWaldboost).report.map;
  const double linear = pipeline_run(EncodeMode::kFeatureless, MapperKind::kLinear).report.map;
  return {boosted - linear >= 0.10,
          fmt("boosted mapper MAP %.3f, raw-patch linear MAP %.3f (margin %.1f pp, need 10)",
              boosted, linear, 100.0 * (boosted - linear))};
}

Outcome featureless_vs_bow() {
  const RunResult& featureless = pipeline_run(EncodeMode::kFeatureless, MapperKind::kWaldboost);
  const double bow = pipeline_run(EncodeMode::kBow, MapperKind::kWaldboost).report.map;
  // Combined rows reuse the featureless model, which carries the codebook too.
  const PipelineConfig c = parse_config(featureless.model.config_text);
  const EncodeOptions combined{EncodeMode::kCombined, MapperKind::kWaldboost, c.alpha};
  const auto train = encode_videos(pipeline_videos(), Split::kTrain, featureless.model, c, combined);
  const auto test = encode_videos(pipeline_videos(), Split::kTest, featureless.model, c, combined);
  const LinearModel svm = train_svm(train, pipeline_videos().num_classes(), c);
  const double both = evaluate_rows(svm, test).map;
  const double f = featureless.report.map;
  return {f >= bow - 0.10 && both >= std::max(f, bow) - 0.05,
          fmt("featureless MAP %.3f, BOW MAP %.3f, combined MAP %.3f (mean stages %.1f)", f, bow,
              both, featureless.test_stats.mean_stages())};
}

Outcome codebookless_viability() {
  PipelineConfig c = pipeline_config();
  c.max_depth = 15;
  const RunResult r =
      run_pipeline(pipeline_videos(), c, {EncodeMode::kCodebookless, MapperKind::kWaldboost, c.alpha});
  const int ids = r.model.mapper->num_classes;
  const std::size_t used = r.test_stats.distinct_labels();
  const double fraction = static_cast<double>(used) / ids;
  const double bow = pipeline_run(EncodeMode::kBow, MapperKind::kWaldboost).report.map;
  return {ids >= 1000 && fraction <= 0.20 && r.report.map >= 0.8 * bow,
          fmt("%d patch ids, %zu predicted (%.1f%%), codebookless MAP %.3f vs 0.8 x BOW %.3f",
              ids, used, 100.0 * fraction, r.report.map, 0.8 * bow)};
}

Outcome kmeans_properties() {
  std::size_t increases = 0;
  std::size_t wrong_assign = 0;
  std::size_t nondeterministic = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_matrix(30 + 5 * trial, 1 + trial % 8, 700 + trial);
    const KMeansOptions opts{2 + trial % 10, 100, static_cast<std::uint64_t>(trial)};
    const KMeansResult r = kmeans_fit(x, opts);
    for (std::size_t i = 1; i < r.distortion.size(); ++i) {
      if (r.distortion[i] > r.distortion[i - 1] * (1.0 + 1e-12)) ++increases;
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
      int best = 0;
      double best_d = squared_distance(x.row(i), r.codebook.centers.row(0));
      for (int c = 1; c < r.codebook.size(); ++c) {
        const double d = squared_distance(x.row(i), r.codebook.centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign_codeword(r.codebook, x.row(i)) != best) ++wrong_assign;
    }
    const KMeansResult again = kmeans_fit(x, opts);
    if (!(again.codebook == r.codebook) || again.distortion != r.distortion) ++nondeterministic;
  }
  return {increases == 0 && wrong_assign == 0 && nondeterministic == 0,
          fmt("100 instances: %zu distortion increases, %zu assignment mismatches, "
              "%zu nondeterministic reruns",
              increases, wrong_assign, nondeterministic)};
}

Outcome model_round_trip() {
  const RunResult& run = pipeline_run(EncodeMode::kFeatureless, MapperKind::kWaldboost);
  testing::TempDir dir("acceptance");
  const auto path = dir.path() / "model.bin";
  save_model(run.model, path);
  const ModelContainer back = load_model(path);
  const PipelineConfig c = parse_config(back.config_text);
  const EncodeOptions opts{EncodeMode::kFeatureless, MapperKind::kWaldboost, c.alpha};
  const auto rows = encode_videos(pipeline_videos(), Split::kTest, back, c, opts);
  bool same_rows = rows.size() == run.test_rows.size();
  for (std::size_t i = 0; same_rows && i < rows.size(); ++i) {
    same_rows = rows[i].values == run.test_rows[i].values;
  }
  const EvaluationReport report = evaluate_rows(*back.svm, rows);
  const bool same_report = report.map == run.report.map && report.per_class_ap == run.report.per_class_ap;

  const std::string bytes = serialize_model(run.model);
  std::size_t flips = 0;
  std::size_t caught = 0;
  for (std::size_t i = 0; i < bytes.size(); i += std::max<std::size_t>(1, bytes.size() / 500)) {
    std::string corrupt = bytes;
    corrupt[i] = static_cast<char>(corrupt[i] ^ 0x21);
    ++flips;
    try {
      deserialize_model(corrupt);
    } catch (const Error&) {
      ++caught;
    }
  }
  bool truncation_caught = false;
  try {
    deserialize_model(bytes.substr(0, bytes.size() - 3));
  } catch (const Error&) {
    truncation_caught = true;
  }
  return {back == run.model && same_rows && same_report && caught == flips && truncation_caught,
          fmt("%zu-byte model: container %s, test histograms %s, report %s, %zu/%zu byte flips "
              "and truncation %s",
              bytes.size(), back == run.model ? "equal" : "differs",
              same_rows ? "identical" : "differ", same_report ? "identical" : "differs", caught,
              flips, truncation_caught ? "detected" : "missed")};
}

Outcome boosting_progress() {
  std::vector<int> y;
  const Matrix x = gaussian_blobs(5, 60, 10, 4.0, 41, y);
  BoostConfig bc;
  bc.stages = 50;
  bc.max_depth = 6;
  const Ensemble e = fit_adaboost(x, y, 5, bc);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    correct += predict_strong(e, x.row(i)).predicted_class() == y[i];
  }
  const double accuracy = static_cast<double>(correct) / x.rows();

  const PatchTask& t = patch_task();
  std::vector<double> stages;
  for (double alpha : {0.999, 0.97, 0.9, 0.5}) {
    double total = 0.0;
    for (std::size_t i = 0; i < t.test_samples.rows(); ++i) {
      total += predict_early_exit(t.ensemble, t.test_samples.row(i), alpha).stages_evaluated;
    }
    stages.push_back(total / t.test_samples.rows());
  }
  const bool monotone = std::is_sorted(stages.rbegin(), stages.rend());
  return {accuracy >= 0.95 && monotone,
          fmt("blob training accuracy %.3f at M=50; mean stages %.1f/%.1f/%.1f/%.1f at "
              "alpha 0.999/0.97/0.9/0.5",
              accuracy, stages[0], stages[1], stages[2], stages[3])};
}

}  // namespace
}  // namespace featureless

int main() {
  using namespace featureless;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, equation_suite},        {2, oracle_equivalence},     {3, conservative_limit},
      {4, early_exit_tradeoff},   {5, mapper_vs_linear},       {6, featureless_vs_bow},
      {7, codebookless_viability}, {8, kmeans_properties},     {9, model_round_trip},
      {10, boosting_progress},
  };
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
