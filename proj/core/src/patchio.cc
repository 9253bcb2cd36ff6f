#include "featureless/patchio.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace featureless {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text,
                               const fs::path& base_dir) {
  DatasetManifest manifest;
  std::set<std::string> seen_ids;
  std::set<std::string> names;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw Error("manifest line " + std::to_string(line_no) +
                  ": expected 4 tab-separated fields");
    }
    ManifestEntry entry;
    entry.video_id = fields[0];
    entry.frame_dir = fields[1];
    if (entry.frame_dir.is_relative()) entry.frame_dir = base_dir / fields[1];
    entry.class_name = fields[2];
    if (fields[3] == "train") {
      entry.split = Split::kTrain;
    } else if (fields[3] == "test") {
      entry.split = Split::kTest;
    } else {
      throw Error("manifest line " + std::to_string(line_no) +
                  ": unknown split '" + fields[3] + "'");
    }
    if (!seen_ids.insert(entry.video_id).second) {
      throw Error("duplicate video id '" + entry.video_id + "'");
    }
    names.insert(entry.class_name);
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw Error("empty manifest");
  manifest.class_names.assign(names.begin(), names.end());
  for (auto& entry : manifest.entries) {
    entry.class_label = static_cast<int>(
        std::lower_bound(manifest.class_names.begin(),
                         manifest.class_names.end(), entry.class_name) -
        manifest.class_names.begin());
  }
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error("manifest not found: " + path.string());
  return parse_manifest(read_file(path), path.parent_path());
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const fs::path base = path.parent_path();
  for (const auto& e : manifest.entries) {
    fs::path dir = e.frame_dir;
    if (!base.empty()) dir = dir.lexically_relative(base);
    out << e.video_id << '\t' << dir.generic_string() << '\t' << e.class_name
        << '\t' << (e.split == Split::kTrain ? "train" : "test") << '\n';
  }
}

Frame parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    }
    if (start == pos) throw Error("malformed PGM header");
    return std::stol(bytes.substr(start, pos - start));
  };

  if (bytes.size() < 2 || bytes[0] != 'P') throw Error("unsupported format: not a PGM file");
  if (bytes[1] != '5') {
    throw Error(std::string("unsupported format: P") + bytes[1] +
                " (only binary P5 grayscale is accepted)");
  }
  pos = 2;
  const long width = read_int();
  const long height = read_int();
  const long maxval = read_int();
  if (width <= 0 || height <= 0) throw Error("malformed PGM header");
  if (maxval != 255) {
    throw Error("unsupported format: maxval " + std::to_string(maxval) +
                " (expected 255)");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size()) throw Error("truncated PGM payload");
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < expected) {
    throw Error("truncated PGM payload: expected " + std::to_string(expected) +
                " bytes, found " + std::to_string(bytes.size() - pos));
  }
  Frame frame;
  frame.width = static_cast<int>(width);
  frame.height = static_cast<int>(height);
  frame.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + expected);
  return frame;
}

Frame load_frame(const fs::path& path) {
  try {
    return parse_pgm(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_frame(const Frame& frame, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels.data()),
            static_cast<std::streamsize>(frame.pixels.size()));
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("frame directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file()) files.push_back(item.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

std::vector<Frame> load_frames(const fs::path& dir) {
  const auto files = list_frames(dir);
  if (files.empty()) throw Error("no frames in " + dir.string());
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(load_frame(f));
  return frames;
}

std::size_t patch_count(int width, int height, int num_frames,
                        const PatchGrid& grid) {
  if (width < grid.patch_size || height < grid.patch_size ||
      num_frames < grid.temporal_depth) {
    return 0;
  }
  const std::size_t nx = (width - grid.patch_size) / grid.stride + 1;
  const std::size_t ny = (height - grid.patch_size) / grid.stride + 1;
  const std::size_t nt = num_frames - grid.temporal_depth + 1;
  return nx * ny * nt;
}

std::vector<double> extract_patch(std::span<const Frame> frames,
                                  const PatchOrigin& origin,
                                  const PatchGrid& grid) {
  const int p = grid.patch_size;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(p) * p * grid.temporal_depth);
  for (int t = 0; t < grid.temporal_depth; ++t) {
    const Frame& f = frames[origin.frame + t];
    for (int y = 0; y < p; ++y) {
      const std::uint8_t* row = f.pixels.data() + (origin.y + y) * f.width + origin.x;
      values.insert(values.end(), row, row + p);
    }
  }
  return values;
}

std::vector<RawPatch> extract_patch_grid(std::span<const Frame> frames,
                                         const PatchGrid& grid) {
  if (grid.temporal_depth < 1) throw Error("temporal_depth must be >= 1");
  if (grid.stride < 1) throw Error("stride must be >= 1");
  if (grid.patch_size < 1) throw Error("patch_size must be >= 1");
  if (frames.empty()) throw Error("no frames to extract from");
  const int width = frames.front().width;
  const int height = frames.front().height;
  for (const Frame& f : frames) {
    if (f.width != width || f.height != height) {
      throw Error("mismatched frame sizes");
    }
  }
  if (width < grid.patch_size || height < grid.patch_size) {
    throw Error("frame " + std::to_string(width) + "x" + std::to_string(height) +
                " is smaller than patch size " + std::to_string(grid.patch_size));
  }
  if (static_cast<int>(frames.size()) < grid.temporal_depth) {
    throw Error("need at least " + std::to_string(grid.temporal_depth) +
                " frames, have " + std::to_string(frames.size()));
  }

  std::vector<RawPatch> patches;
  patches.reserve(patch_count(width, height, static_cast<int>(frames.size()), grid));
  const int last_t = static_cast<int>(frames.size()) - grid.temporal_depth;
  for (int t = 0; t <= last_t; ++t) {
    for (int y = 0; y + grid.patch_size <= height; y += grid.stride) {
      for (int x = 0; x + grid.patch_size <= width; x += grid.stride) {
        RawPatch patch;
        patch.origin = {t, x, y};
        patch.values = extract_patch(frames, patch.origin, grid);
        patches.push_back(std::move(patch));
      }
    }
  }
  return patches;
}

std::vector<double> l1_normalize(std::span<const double> patch) {
  if (patch.empty()) throw Error("cannot normalize an empty patch");
  double total = 0.0;
  for (double v : patch) {
    if (v < 0.0) throw Error("patch values must be nonnegative");
    total += v;
  }
  std::vector<double> out(patch.size());
  if (total == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(patch.size()));
    return out;
  }
  for (std::size_t i = 0; i < patch.size(); ++i) out[i] = patch[i] / total;
  return out;
}

Sample make_sample(const RawPatch& patch, const std::string& video_id) {
  return Sample{l1_normalize(patch.values), video_id, patch.origin};
}

}  // namespace featureless
