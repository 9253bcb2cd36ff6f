#include "featureless/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace featureless {
namespace fs = std::filesystem;

std::vector<Frame> render_grating(const GratingParams& params, int width,
                                  int height, int num_frames, std::uint64_t seed) {
  if (width < 1 || height < 1 || num_frames < 1) throw Error("render_grating: empty video");
  if (!(params.wavelength > 0.0)) throw Error("render_grating: wavelength must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, params.noise > 0.0 ? params.noise : 1.0);
  const double kx = std::cos(params.orientation);
  const double ky = std::sin(params.orientation);
  const double omega = 2.0 * std::numbers::pi / params.wavelength;
  std::vector<Frame> frames(num_frames);
  for (int t = 0; t < num_frames; ++t) {
    Frame& f = frames[t];
    f.width = width;
    f.height = height;
    f.pixels.resize(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double along = kx * x + ky * y - params.speed * t;
        double v = 128.0 + params.contrast * std::sin(omega * along + params.phase);
        if (params.noise > 0.0) v += noise(rng);
        f.pixels[static_cast<std::size_t>(y) * width + x] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return frames;
}

GratingParams class_grating(int c, int num_classes) {
  if (num_classes < 1 || c < 0 || c >= num_classes) throw Error("class_grating: bad class");
  GratingParams p;
  p.orientation = std::numbers::pi * c / num_classes;
  p.speed = (c % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.5 * (c % 3));
  return p;
}

VideoSet generate_synthetic(const SyntheticOptions& options) {
  if (options.num_classes < 2) throw Error("synthetic: need at least 2 classes");
  if (options.train_per_class < 1 || options.test_per_class < 1) {
    throw Error("synthetic: need at least one train and one test video per class");
  }
  VideoSet set;
  for (int c = 0; c < options.num_classes; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "class%02d", c);
    set.class_names.emplace_back(name);
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int per_class = options.train_per_class + options.test_per_class;
  for (int c = 0; c < options.num_classes; ++c) {
    const GratingParams base = class_grating(c, options.num_classes);
    for (int i = 0; i < per_class; ++i) {
      GratingParams p = base;
      p.orientation += 0.08 * unit(rng);
      p.wavelength = std::uniform_real_distribution<double>(
          options.wavelength_min, options.wavelength_max)(rng);
      p.contrast = std::uniform_real_distribution<double>(
          options.contrast_min, options.contrast_max)(rng);
      p.speed *= 1.0 + 0.15 * unit(rng);
      p.phase = phase(rng);
      p.noise = options.noise;
      Video video;
      char id[48];
      std::snprintf(id, sizeof id, "%s_v%02d", set.class_names[c].c_str(), i);
      video.id = id;
      video.label = c;
      video.split = i < options.train_per_class ? Split::kTrain : Split::kTest;
      video.frames = render_grating(p, options.width, options.height,
                                    options.num_frames, mix_seed(options.seed, c * 1000 + i));
      set.videos.push_back(std::move(video));
    }
  }
  return set;
}

fs::path write_synthetic(const SyntheticOptions& options, const fs::path& out_dir) {
  const VideoSet set = generate_synthetic(options);
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.class_names = set.class_names;
  for (const Video& video : set.videos) {
    const fs::path dir = out_dir / video.id;
    fs::create_directories(dir);
    for (std::size_t t = 0; t < video.frames.size(); ++t) {
      char file[32];
      std::snprintf(file, sizeof file, "frame_%04zu.pgm", t);
      save_frame(video.frames[t], dir / file);
    }
    ManifestEntry entry;
    entry.video_id = video.id;
    entry.frame_dir = dir;
    entry.class_name = set.class_names[video.label];
    entry.class_label = video.label;
    entry.split = video.split;
    manifest.entries.push_back(std::move(entry));
  }
  const fs::path path = out_dir / "manifest.tsv";
  save_manifest(manifest, path);
  return path;
}

}  // namespace featureless
