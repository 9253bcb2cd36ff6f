// featureless: command-line driver for the patch-to-codeword pipeline.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "featureless/config.h"
#include "featureless/encode.h"
#include "featureless/model_io.h"
#include "featureless/patchio.h"
#include "featureless/pipeline.h"
#include "featureless/synthetic.h"

namespace fs = std::filesystem;
using namespace featureless;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string manifest_path;
  std::string model_path;
  std::string input_path;
  std::string out_path;
  std::string mode = "featureless";
  std::string mapper = "waldboost";
  std::string split = "all";
  std::vector<std::string> overrides;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void log_line(const CommonFlags& flags, const std::string& text) {
  if (!flags.quiet) std::cerr << text << '\n';
}

// Base config (model snapshot, when there is one), then --config, then
// --set and the dedicated flags.
PipelineConfig resolve_config(const CommonFlags& flags, const ModelContainer* model) {
  PipelineConfig config;
  if (model != nullptr && !model->config_text.empty()) config = parse_config(model->config_text);
  if (!flags.config_path.empty()) config.apply_text(load_config(flags.config_path).to_text());
  for (const std::string& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.alpha) config.alpha = *flags.alpha;
  if (flags.seed) config.seed = *flags.seed;
  config.validate();
  return config;
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(std::string("missing required flag ") + flag);
  return value;
}

ModelContainer load_required_model(const CommonFlags& flags) {
  return load_model(require(flags.model_path, "--model"));
}

VideoSet load_dataset(const CommonFlags& flags) {
  return load_videos(load_manifest(require(flags.manifest_path, "--manifest")));
}

StageCallback stage_logger(const CommonFlags& flags, int stages) {
  const int every = std::max(1, stages / 10);
  return [&flags, every, stages](const StageReport& r) {
    if (r.stage % every != 0 && r.stage != stages) return;
    char line[160];
    std::snprintf(line, sizeof line, "stage %d pool %zu distinct %zu train_acc %.4f",
                  r.stage, r.pool_size, r.distinct_in_pool, r.training_accuracy);
    log_line(flags, line);
  };
}

std::optional<Split> parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "all") return std::nullopt;
  throw Error("unknown split '" + name + "'");
}

void write_rows(const std::vector<HistogramRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_histogram_rows(out, rows);
}

std::vector<HistogramRow> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_histogram_rows(in);
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

// --- commands ---------------------------------------------------------------

void cmd_gen_synthetic(const CommonFlags& flags, SyntheticOptions options) {
  if (flags.seed) options.seed = *flags.seed;
  const fs::path manifest = write_synthetic(options, require(flags.out_path, "--out"));
  std::cout << manifest.string() << '\n';
}

void cmd_build_codebook(const CommonFlags& flags) {
  const PipelineConfig config = resolve_config(flags, nullptr);
  const VideoSet videos = load_dataset(flags);
  const PatchSet training = collect_patches(videos, Split::kTrain, config, true,
                                            config.max_train_patches, mix_seed(config.seed, 1));
  ModelContainer model;
  model.class_names = videos.class_names;
  model.codebook = build_codebook(training, config);
  model.config_text = config.to_text();
  save_model(model, require(flags.out_path, "--out"));
  log_line(flags, "codebook " + std::to_string(model.codebook->size()) + " words over " +
                      std::to_string(training.descriptors.rows()) + " descriptors");
}

void cmd_train_mapper(const CommonFlags& flags) {
  const EncodeMode mode = parse_encode_mode(flags.mode);
  const MapperKind kind = parse_mapper_kind(flags.mapper);
  if (mode == EncodeMode::kBow) throw Error("train-mapper needs a mapper mode");
  ModelContainer model;
  if (!flags.model_path.empty()) model = load_model(flags.model_path);
  PipelineConfig config = resolve_config(flags, &model);
  config.codebookless = mode == EncodeMode::kCodebookless;
  config.validate();
  if (!config.codebookless && !model.codebook) {
    throw Error("codebook required (run build-codebook and pass --model)");
  }
  if (model.codebook && model.codebook->kind != config.descriptor) {
    throw Error("codebook descriptor differs from the config");
  }
  const VideoSet videos = load_dataset(flags);
  if (config.codebookless) model.codebook.reset();
  const PatchSet training = collect_patches(videos, Split::kTrain, config, true,
                                            config.max_train_patches, mix_seed(config.seed, 1));
  const MapperData data =
      make_mapper_data(training, model.codebook ? &*model.codebook : nullptr, config);
  log_line(flags, "mapper data: " + std::to_string(data.train_samples.rows()) + " train, " +
                      std::to_string(data.validation_samples.rows()) + " validation, " +
                      std::to_string(data.num_labels) + " labels");
  if (kind == MapperKind::kLinear) {
    model.linear_mapper = train_linear_mapper(data, config);
  } else {
    model.mapper = train_mapper(data, config, stage_logger(flags, config.stages));
  }
  model.class_names = videos.class_names;
  model.config_text = config.to_text();
  model.svm.reset();
  model.svm_mode.clear();
  save_model(model, require(flags.out_path, "--out"));
}

void cmd_encode(const CommonFlags& flags) {
  const ModelContainer model = load_required_model(flags);
  const PipelineConfig config = resolve_config(flags, &model);
  EncodeOptions options;
  options.mode = parse_encode_mode(flags.mode);
  options.mapper = parse_mapper_kind(flags.mapper);
  options.alpha = config.alpha;
  if (options.mode != EncodeMode::kBow && !model.mapper && !model.linear_mapper) {
    throw Error("mapper model required");
  }
  const VideoSet videos = load_dataset(flags);
  EncodeStats stats;
  const auto rows =
      encode_videos(videos, parse_split(flags.split), model, config, options, &stats);
  write_rows(rows, require(flags.out_path, "--out"));
  if (stats.patches > 0) {
    char line[160];
    std::snprintf(line, sizeof line, "encoded %zu videos, %zu patches, mean stages %.3f",
                  rows.size(), stats.patches, stats.mean_stages());
    log_line(flags, line);
  }
}

void cmd_train_svm(const CommonFlags& flags) {
  ModelContainer model = load_required_model(flags);
  const PipelineConfig config = resolve_config(flags, &model);
  const auto rows = read_rows(require(flags.input_path, "--input"));
  if (rows.empty()) throw Error("no histogram rows in " + flags.input_path);
  int num_classes = static_cast<int>(model.class_names.size());
  for (const auto& r : rows) num_classes = std::max(num_classes, r.label + 1);
  model.svm = train_svm(rows, num_classes, config);
  model.svm_mode = flags.mode;
  save_model(model, require(flags.out_path, "--out"));
}

void cmd_evaluate(const CommonFlags& flags) {
  const ModelContainer model = load_required_model(flags);
  if (!model.svm) throw Error("svm model required (run train-svm)");
  std::vector<HistogramRow> rows;
  if (!flags.input_path.empty()) {
    rows = read_rows(flags.input_path);
  } else {
    const PipelineConfig config = resolve_config(flags, &model);
    EncodeOptions options;
    options.mode = parse_encode_mode(model.svm_mode);
    options.mapper = parse_mapper_kind(flags.mapper);
    options.alpha = config.alpha;
    rows = encode_videos(load_dataset(flags), Split::kTest, model, config, options);
  }
  const EvaluationReport report = evaluate_rows(*model.svm, rows);
  write_text(format_report(report, model.class_names), flags.out_path);
}

std::string format_bench(const std::vector<BenchRow>& rows, bool aligned) {
  std::string out;
  char line[256];
  if (aligned) {
    std::snprintf(line, sizeof line, "%8s %12s %18s %9s %9s\n", "alpha", "mean_stages",
                  "time_per_frame_s", "speedup", "map");
    out += line;
    for (const BenchRow& r : rows) {
      std::snprintf(line, sizeof line, "%8.4f %12.3f %18.3e %9.3f %9.4f\n", r.alpha,
                    r.mean_stages, r.time_per_frame_s, r.speedup, r.map);
      out += line;
    }
  } else {
    out += "alpha,mean_stages,time_per_frame_s,speedup,map\n";
    for (const BenchRow& r : rows) {
      std::snprintf(line, sizeof line, "%.6g,%.6f,%.6e,%.6f,%.6f\n", r.alpha, r.mean_stages,
                    r.time_per_frame_s, r.speedup, r.map);
      out += line;
    }
  }
  return out;
}

void cmd_run_bench(const CommonFlags& flags, std::vector<double> alphas, int repeats) {
  const ModelContainer model = load_required_model(flags);
  if (!model.mapper) throw Error("mapper model required");
  const PipelineConfig config = resolve_config(flags, &model);
  if (alphas.empty()) alphas = {1.0, 0.999, 0.97, 0.9, 0.5};
  std::sort(alphas.begin(), alphas.end(), std::greater<>());
  const auto rows = run_bench(load_dataset(flags), model, config, alphas, repeats);
  std::cout << format_bench(rows, true);
  if (!flags.out_path.empty()) write_text(format_bench(rows, false), flags.out_path);
}

void cmd_run_all(const CommonFlags& flags) {
  const PipelineConfig config = resolve_config(flags, nullptr);
  EncodeOptions options;
  options.mode = parse_encode_mode(flags.mode);
  options.mapper = parse_mapper_kind(flags.mapper);
  options.alpha = config.alpha;
  const VideoSet videos = load_dataset(flags);
  const fs::path out_dir = require(flags.out_path, "--out");
  fs::create_directories(out_dir);
  const RunResult result =
      run_pipeline(videos, config, options, stage_logger(flags, config.stages));
  save_model(result.model, out_dir / "model.bin");
  write_rows(result.train_rows, (out_dir / "train.csv").string());
  write_rows(result.test_rows, (out_dir / "test.csv").string());
  const std::string report = format_report(result.report, videos.class_names);
  write_text(report, (out_dir / "report.txt").string());
  std::cout << report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raw-patch to codeword mapping with early-exit boosted trees"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "key=value config file");
    cmd->add_option("--set", flags.overrides, "config override key=value (repeatable)");
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_flag("--quiet", flags.quiet, "no progress on stderr");
  };

  SyntheticOptions synthetic;
  auto* gen = app.add_subcommand("gen-synthetic", "write the drifting-grating dataset");
  gen->add_option("--out", flags.out_path, "output directory")->required();
  gen->add_option("--seed", flags.seed, "random seed");
  gen->add_option("--classes", synthetic.num_classes, "number of classes");
  gen->add_option("--train-per-class", synthetic.train_per_class);
  gen->add_option("--test-per-class", synthetic.test_per_class);
  gen->add_option("--frames", synthetic.num_frames);
  gen->add_option("--width", synthetic.width);
  gen->add_option("--height", synthetic.height);
  gen->add_option("--noise", synthetic.noise);

  auto* codebook = app.add_subcommand("build-codebook", "k-means codebook over training descriptors");
  add_common(codebook);
  codebook->add_option("--manifest", flags.manifest_path)->required();
  codebook->add_option("--out", flags.out_path, "model file")->required();

  auto* mapper = app.add_subcommand("train-mapper", "boosted patch-to-codeword mapper");
  add_common(mapper);
  mapper->add_option("--manifest", flags.manifest_path)->required();
  mapper->add_option("--model", flags.model_path, "model holding the codebook");
  mapper->add_option("--mode", flags.mode, "featureless | codebookless");
  mapper->add_option("--mapper", flags.mapper, "waldboost | linear");
  mapper->add_option("--alpha", flags.alpha, "stopping threshold stored in the model");
  mapper->add_option("--out", flags.out_path, "model file")->required();

  auto* encode = app.add_subcommand("encode", "per-video histograms");
  add_common(encode);
  encode->add_option("--manifest", flags.manifest_path)->required();
  encode->add_option("--model", flags.model_path)->required();
  encode->add_option("--mode", flags.mode, "bow | featureless | codebookless | combined");
  encode->add_option("--mapper", flags.mapper, "waldboost | adaboost | linear");
  encode->add_option("--alpha", flags.alpha);
  encode->add_option("--split", flags.split, "train | test | all");
  encode->add_option("--out", flags.out_path, "histogram CSV")->required();

  auto* svm = app.add_subcommand("train-svm", "linear one-vs-rest SVM on histograms");
  add_common(svm);
  svm->add_option("--model", flags.model_path)->required();
  svm->add_option("--input", flags.input_path, "training histogram CSV")->required();
  svm->add_option("--mode", flags.mode, "representation of the histograms");
  svm->add_option("--out", flags.out_path, "model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "MAP report on test videos");
  add_common(evaluate);
  evaluate->add_option("--model", flags.model_path)->required();
  evaluate->add_option("--input", flags.input_path, "test histogram CSV");
  evaluate->add_option("--manifest", flags.manifest_path, "encode test videos instead of --input");
  evaluate->add_option("--mapper", flags.mapper);
  evaluate->add_option("--alpha", flags.alpha);
  evaluate->add_option("--out", flags.out_path, "report file (default stdout)");

  std::vector<double> alphas;
  int repeats = 3;
  auto* bench = app.add_subcommand("run-bench", "early-exit cost/accuracy table");
  add_common(bench);
  bench->add_option("--manifest", flags.manifest_path)->required();
  bench->add_option("--model", flags.model_path)->required();
  bench->add_option("--alpha", alphas, "alphas to sweep (repeatable)");
  bench->add_option("--repeats", repeats, "timing repeats");
  bench->add_option("--out", flags.out_path, "machine-readable CSV");

  auto* all = app.add_subcommand("run-all", "train and evaluate end to end");
  add_common(all);
  all->add_option("--manifest", flags.manifest_path)->required();
  all->add_option("--mode", flags.mode, "bow | featureless | codebookless | combined");
  all->add_option("--mapper", flags.mapper, "waldboost | adaboost | linear");
  all->add_option("--alpha", flags.alpha);
  all->add_option("--out", flags.out_path, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) cmd_gen_synthetic(flags, synthetic);
    else if (*codebook) cmd_build_codebook(flags);
    else if (*mapper) cmd_train_mapper(flags);
    else if (*encode) cmd_encode(flags);
    else if (*svm) cmd_train_svm(flags);
    else if (*evaluate) cmd_evaluate(flags);
    else if (*bench) cmd_run_bench(flags, alphas, repeats);
    else if (*all) cmd_run_all(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
