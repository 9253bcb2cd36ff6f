#ifndef FEATURELESS_SYNTHETIC_H_
#define FEATURELESS_SYNTHETIC_H_

// Drifting-grating video generator. A class fixes the orientation and drift
// velocity of a sinusoid; every video jitters both slightly, draws its
// wavelength and contrast from ranges shared by all classes and starts at a
// random phase.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "featureless/pipeline.h"

namespace featureless {

struct GratingParams {
  double orientation = 0.0;  // radians, direction of the wave vector
  double wavelength = 8.0;   // pixels
  double contrast = 60.0;    // amplitude around mean gray 128
  double speed = 1.0;        // pixels per frame along the wave vector
  double phase = 0.0;
  double noise = 4.0;        // std. dev. of additive Gaussian noise
};

std::vector<Frame> render_grating(const GratingParams& params, int width,
                                  int height, int num_frames, std::uint64_t seed);

struct SyntheticOptions {
  int num_classes = 5;
  int train_per_class = 6;
  int test_per_class = 6;
  int num_frames = 10;
  int width = 72;
  int height = 72;
  double noise = 4.0;
  double wavelength_min = 6.0;
  double wavelength_max = 12.0;
  double contrast_min = 20.0;
  double contrast_max = 90.0;
  std::uint64_t seed = 1;
};

// Orientation and speed of class c before per-video jitter.
GratingParams class_grating(int c, int num_classes);

VideoSet generate_synthetic(const SyntheticOptions& options);

// Writes every video as a directory of PGM frames plus `manifest.tsv`;
// returns the manifest path.
std::filesystem::path write_synthetic(const SyntheticOptions& options,
                                      const std::filesystem::path& out_dir);

}  // namespace featureless

#endif  // FEATURELESS_SYNTHETIC_H_
