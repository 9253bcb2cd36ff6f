#ifndef FEATURELESS_PATCHIO_H_
#define FEATURELESS_PATCHIO_H_

// Dataset ingestion: manifests, PGM frames, dense patch grids and L1
// normalization of raw gray values into boosting samples.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "featureless/common.h"

namespace featureless {

enum class Split { kTrain, kTest };

struct ManifestEntry {
  std::string video_id;
  std::filesystem::path frame_dir;
  std::string class_name;
  int class_label = 0;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  // Sorted distinct class names; position is the class label.
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Parses `<video_id>\t<frame_dir>\t<class_name>\t<train|test>` lines.
// Relative frame directories resolve against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& base_dir);
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const { return pixels[y * width + x]; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

// Binary PGM (P5) with maxval 255 only.
Frame load_frame(const std::filesystem::path& path);
Frame parse_pgm(const std::string& bytes);
void save_frame(const Frame& frame, const std::filesystem::path& path);

// Frame files of a directory in lexicographic filename order.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);
std::vector<Frame> load_frames(const std::filesystem::path& dir);

struct PatchOrigin {
  int frame = 0;  // first frame of the temporal stack
  int x = 0;
  int y = 0;
};

struct RawPatch {
  // Frame-major stack: patch_size * patch_size values per frame.
  std::vector<double> values;
  PatchOrigin origin;
};

struct PatchGrid {
  int patch_size = 24;
  int stride = 24;
  int temporal_depth = 1;
};

// Number of patches extract_patch_grid yields for the given geometry.
std::size_t patch_count(int width, int height, int num_frames,
                        const PatchGrid& grid);

// Dense grid: frame index outermost, then y, then x.
std::vector<RawPatch> extract_patch_grid(std::span<const Frame> frames,
                                         const PatchGrid& grid);

// Single window at (x, y) stacked over temporal_depth frames from `frame`.
std::vector<double> extract_patch(std::span<const Frame> frames,
                                  const PatchOrigin& origin,
                                  const PatchGrid& grid);

// Divides by the sum; an all-zero patch maps to uniform 1/D.
std::vector<double> l1_normalize(std::span<const double> patch);

struct Sample {
  std::vector<double> values;
  std::string video_id;
  PatchOrigin origin;
};

Sample make_sample(const RawPatch& patch, const std::string& video_id);

}  // namespace featureless

#endif  // FEATURELESS_PATCHIO_H_
