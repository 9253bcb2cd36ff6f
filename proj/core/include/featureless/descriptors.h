#ifndef FEATURELESS_DESCRIPTORS_H_
#define FEATURELESS_DESCRIPTORS_H_

// Appearance and motion descriptors used only to produce training labels.
//
//   HOG    2x2 cells, 9 unsigned orientation bins, central differences,
//          36 values, L1-normalized.
//   HOF    Lucas-Kanade flow, 8 direction bins + 1 no-motion bin.
//   HOF3D  sum of the per-pair HOF histograms over 8 consecutive frame
//          pairs, L1-normalized.

#include <span>
#include <string_view>
#include <vector>

#include "featureless/common.h"

namespace featureless {

enum class DescriptorKind { kHog, kHof, kHof3d };

std::string_view to_string(DescriptorKind kind);
DescriptorKind parse_descriptor_kind(std::string_view name);

// Frames consumed per descriptor: 1 (HOG), 2 (HOF), 9 (HOF3D).
int frames_required(DescriptorKind kind);
std::size_t descriptor_length(DescriptorKind kind);

struct Descriptor {
  std::vector<double> values;
  DescriptorKind kind = DescriptorKind::kHog;
};

inline constexpr int kHogCells = 2;
inline constexpr int kHogBins = 9;
inline constexpr int kHofDirections = 8;
inline constexpr int kHofBins = kHofDirections + 1;
inline constexpr int kHof3dFrames = 9;

// `patch` is a patch_size x patch_size row-major block of gray values.
Descriptor hog_descriptor(std::span<const double> patch, int patch_size);

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> u;
  std::vector<double> v;
};

struct FlowParams {
  int window = 5;
  // Below this determinant the 2x2 structure tensor counts as singular.
  double min_determinant = 1e-9;
};

// Dense Lucas-Kanade over the pixels where the full window fits inside the
// patch. The field is (size - 2*(window/2)) square; x grows right, y down.
FlowField lucas_kanade_flow(std::span<const double> prev,
                            std::span<const double> next, int patch_size,
                            const FlowParams& params = {});

struct HofParams {
  double motion_threshold = 0.25;
};

Descriptor hof_descriptor(const FlowField& flow, const HofParams& params = {});

// `frames` holds kHof3dFrames stacked patch_size^2 blocks (frame-major).
Descriptor hof3d_descriptor(std::span<const double> frames, int patch_size,
                            const FlowParams& flow_params = {},
                            const HofParams& hof_params = {});

// Dispatches on kind; `stack` must hold frames_required(kind) frames.
Descriptor compute_descriptor(DescriptorKind kind, std::span<const double> stack,
                              int patch_size);

}  // namespace featureless

#endif  // FEATURELESS_DESCRIPTORS_H_
