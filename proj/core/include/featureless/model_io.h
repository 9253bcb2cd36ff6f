#ifndef FEATURELESS_MODEL_IO_H_
#define FEATURELESS_MODEL_IO_H_

// Single-file binary model container.
//
//   "MCWB"  u32 version  u32 section_count
//   section: char[4] tag  u64 payload_size  u32 crc32(payload)  payload
//
// Integers and IEEE-754 doubles are little-endian. Sections:
//   CONF  pipeline config snapshot (key=value text)
//   CDBK  codebook
//   ENSM  boosted ensemble (weak classifiers + alpha)
//   STOP  stopping trees, one per stage
//   LINR  video-level linear SVM
//   LMAP  raw-patch linear mapper (baseline)
//   META  label space of the mapper (codebook or patch-id) and class names

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "featureless/boost.h"
#include "featureless/classify.h"
#include "featureless/codebook.h"

namespace featureless {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelContainer {
  std::string config_text;
  std::optional<Codebook> codebook;
  std::optional<Ensemble> mapper;
  std::optional<LinearModel> svm;
  std::optional<LinearModel> linear_mapper;
  // Video class names the svm was trained on.
  std::vector<std::string> class_names;
  // Representation the svm expects ("bow", "featureless", ...).
  std::string svm_mode;

  friend bool operator==(const ModelContainer&, const ModelContainer&) = default;
};

std::string serialize_model(const ModelContainer& model);
ModelContainer deserialize_model(const std::string& bytes);

void save_model(const ModelContainer& model, const std::filesystem::path& path);
ModelContainer load_model(const std::filesystem::path& path);

}  // namespace featureless

#endif  // FEATURELESS_MODEL_IO_H_
