#include "featureless/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "featureless/common.h"

namespace featureless {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw Error("config: bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("config: bad boolean '" + std::string(value) + "' for " + std::string(key));
}

std::string format_double(double v) {
  char buffer[64];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, res.ptr);
}

}  // namespace

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("config: ") + what);
  };
  require(patch_size >= 4, "patch_size must be >= 4");
  require(stride >= 0, "stride must be >= 0");
  require(temporal_depth >= 1, "temporal_depth must be >= 1");
  require(codebook_size >= 2, "codebook_size must be >= 2");
  require(kmeans_iters >= 1, "kmeans_iters must be >= 1");
  require(stages >= 1, "stages must be >= 1");
  require(max_depth >= 0 && stop_max_depth >= 0, "tree depths must be >= 0");
  require(probe_depth >= 0, "probe_depth must be >= 0");
  require(pool_fraction > 0.0 && pool_fraction <= 1.0, "pool_fraction must be in (0, 1]");
  require(trim_mass >= 0.0 && trim_mass < 1.0, "trim_mass must be in [0, 1)");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          "validation_fraction must be in (0, 1)");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0, 1]");
  require(svm_lambda > 0.0 && mapper_svm_lambda > 0.0, "svm lambda must be > 0");
  require(svm_epochs >= 1 && mapper_svm_epochs >= 1, "svm epochs must be >= 1");
  require(max_train_patches >= 2 && max_descriptors >= 2, "patch limits must be >= 2");
  require(sample_dim() >= 4, "sample dimension must be >= 4");
  if (descriptor == DescriptorKind::kHof3d && temporal_depth != kHof3dFrames) {
    throw Error("config: descriptor hof3d needs temporal_depth=9 (got " +
                std::to_string(temporal_depth) + ")");
  }
  if (descriptor == DescriptorKind::kHog && patch_size % 2 != 0) {
    throw Error("config: hog needs an even patch_size");
  }
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "patch_size") patch_size = parse_number<int>(key, value);
  else if (key == "stride") stride = parse_number<int>(key, value);
  else if (key == "temporal_depth") temporal_depth = parse_number<int>(key, value);
  else if (key == "max_train_patches") max_train_patches = parse_number<std::size_t>(key, value);
  else if (key == "descriptor") descriptor = parse_descriptor_kind(value);
  else if (key == "codebook_size") codebook_size = parse_number<int>(key, value);
  else if (key == "codebookless") codebookless = parse_bool(key, value);
  else if (key == "max_descriptors") max_descriptors = parse_number<std::size_t>(key, value);
  else if (key == "kmeans_iters") kmeans_iters = parse_number<int>(key, value);
  else if (key == "stages") stages = parse_number<int>(key, value);
  else if (key == "subset_size") subset_size = parse_number<int>(key, value);
  else if (key == "subset_candidates") subset_candidates = parse_number<int>(key, value);
  else if (key == "probe_depth") probe_depth = parse_number<int>(key, value);
  else if (key == "max_depth") max_depth = parse_number<int>(key, value);
  else if (key == "pool_fraction") pool_fraction = parse_number<double>(key, value);
  else if (key == "trim_mass") trim_mass = parse_number<double>(key, value);
  else if (key == "min_leaf_fraction") min_leaf_fraction = parse_number<double>(key, value);
  else if (key == "validation_fraction") validation_fraction = parse_number<double>(key, value);
  else if (key == "stop_max_depth") stop_max_depth = parse_number<int>(key, value);
  else if (key == "stop_min_leaf_fraction") stop_min_leaf_fraction = parse_number<double>(key, value);
  else if (key == "alpha") alpha = parse_number<double>(key, value);
  else if (key == "svm_lambda") svm_lambda = parse_number<double>(key, value);
  else if (key == "svm_epochs") svm_epochs = parse_number<int>(key, value);
  else if (key == "mapper_svm_lambda") mapper_svm_lambda = parse_number<double>(key, value);
  else if (key == "mapper_svm_epochs") mapper_svm_epochs = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else throw Error("config: unknown key '" + std::string(key) + "'");
}

void PipelineConfig::apply_text(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(view.substr(0, eq)), view.substr(eq + 1));
  }
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  out << "patch_size=" << patch_size << '\n'
      << "stride=" << stride << '\n'
      << "temporal_depth=" << temporal_depth << '\n'
      << "max_train_patches=" << max_train_patches << '\n'
      << "descriptor=" << to_string(descriptor) << '\n'
      << "codebook_size=" << codebook_size << '\n'
      << "codebookless=" << (codebookless ? "true" : "false") << '\n'
      << "max_descriptors=" << max_descriptors << '\n'
      << "kmeans_iters=" << kmeans_iters << '\n'
      << "stages=" << stages << '\n'
      << "subset_size=" << subset_size << '\n'
      << "subset_candidates=" << subset_candidates << '\n'
      << "probe_depth=" << probe_depth << '\n'
      << "max_depth=" << max_depth << '\n'
      << "pool_fraction=" << format_double(pool_fraction) << '\n'
      << "trim_mass=" << format_double(trim_mass) << '\n'
      << "min_leaf_fraction=" << format_double(min_leaf_fraction) << '\n'
      << "validation_fraction=" << format_double(validation_fraction) << '\n'
      << "stop_max_depth=" << stop_max_depth << '\n'
      << "stop_min_leaf_fraction=" << format_double(stop_min_leaf_fraction) << '\n'
      << "alpha=" << format_double(alpha) << '\n'
      << "svm_lambda=" << format_double(svm_lambda) << '\n'
      << "svm_epochs=" << svm_epochs << '\n'
      << "mapper_svm_lambda=" << format_double(mapper_svm_lambda) << '\n'
      << "mapper_svm_epochs=" << mapper_svm_epochs << '\n'
      << "seed=" << seed << '\n';
  return out.str();
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  config.apply_text(text);
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace featureless
