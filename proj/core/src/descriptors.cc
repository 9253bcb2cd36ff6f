#include "featureless/descriptors.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace featureless {

std::string_view to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kHog:
      return "hog";
    case DescriptorKind::kHof:
      return "hof";
    case DescriptorKind::kHof3d:
      return "hof3d";
  }
  return "unknown";
}

DescriptorKind parse_descriptor_kind(std::string_view name) {
  if (name == "hog") return DescriptorKind::kHog;
  if (name == "hof") return DescriptorKind::kHof;
  if (name == "hof3d") return DescriptorKind::kHof3d;
  throw Error("unknown descriptor kind '" + std::string(name) + "'");
}

int frames_required(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kHog:
      return 1;
    case DescriptorKind::kHof:
      return 2;
    case DescriptorKind::kHof3d:
      return kHof3dFrames;
  }
  return 1;
}

std::size_t descriptor_length(DescriptorKind kind) {
  return kind == DescriptorKind::kHog ? kHogCells * kHogCells * kHogBins
                                      : kHofBins;
}

namespace {

void normalize_or_uniform(std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  if (total <= 0.0) {
    std::fill(values.begin(), values.end(), 1.0 / values.size());
    return;
  }
  for (double& v : values) v /= total;
}

// np.gradient-style derivatives: central differences inside, one-sided at
// the border.
void image_gradients(std::span<const double> img, int size,
                     std::vector<double>& gx, std::vector<double>& gy) {
  gx.assign(img.size(), 0.0);
  gy.assign(img.size(), 0.0);
  auto at = [&](int x, int y) { return img[y * size + x]; };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double dx;
      if (size == 1) {
        dx = 0.0;
      } else if (x == 0) {
        dx = at(1, y) - at(0, y);
      } else if (x == size - 1) {
        dx = at(x, y) - at(x - 1, y);
      } else {
        dx = 0.5 * (at(x + 1, y) - at(x - 1, y));
      }
      double dy;
      if (size == 1) {
        dy = 0.0;
      } else if (y == 0) {
        dy = at(x, 1) - at(x, 0);
      } else if (y == size - 1) {
        dy = at(x, y) - at(x, y - 1);
      } else {
        dy = 0.5 * (at(x, y + 1) - at(x, y - 1));
      }
      gx[y * size + x] = dx;
      gy[y * size + x] = dy;
    }
  }
}

void check_square(std::span<const double> patch, int patch_size,
                  const char* what) {
  if (patch_size <= 0 ||
      patch.size() != static_cast<std::size_t>(patch_size) * patch_size) {
    throw Error(std::string(what) + ": expected a " + std::to_string(patch_size) +
                "x" + std::to_string(patch_size) + " patch, got " +
                std::to_string(patch.size()) + " values");
  }
}

}  // namespace

Descriptor hog_descriptor(std::span<const double> patch, int patch_size) {
  check_square(patch, patch_size, "hog");
  if (patch_size % kHogCells != 0 || patch_size < 4) {
    throw Error("hog: patch size must be even and >= 4");
  }
  const int cell = patch_size / kHogCells;
  const double bin_width = std::numbers::pi / kHogBins;
  Descriptor d{std::vector<double>(descriptor_length(DescriptorKind::kHog), 0.0),
               DescriptorKind::kHog};
  auto at = [&](int x, int y) { return patch[y * patch_size + x]; };
  // Border pixels lack a central difference and are skipped.
  for (int y = 1; y < patch_size - 1; ++y) {
    for (int x = 1; x < patch_size - 1; ++x) {
      const double gx = 0.5 * (at(x + 1, y) - at(x - 1, y));
      const double gy = 0.5 * (at(x, y + 1) - at(x, y - 1));
      const double magnitude = std::hypot(gx, gy);
      if (magnitude == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      int bin = static_cast<int>(angle / bin_width);
      if (bin >= kHogBins) bin = kHogBins - 1;
      const int cell_index = (y / cell) * kHogCells + (x / cell);
      d.values[cell_index * kHogBins + bin] += magnitude;
    }
  }
  normalize_or_uniform(d.values);
  return d;
}

FlowField lucas_kanade_flow(std::span<const double> prev,
                            std::span<const double> next, int patch_size,
                            const FlowParams& params) {
  if (prev.size() != next.size()) throw Error("flow: dimension mismatch");
  check_square(prev, patch_size, "flow");
  if (params.window < 3 || params.window % 2 == 0) {
    throw Error("flow: window must be odd and >= 3");
  }
  const int half = params.window / 2;
  if (patch_size < params.window) throw Error("flow: patch smaller than window");

  std::vector<double> gx0, gy0, gx1, gy1;
  image_gradients(prev, patch_size, gx0, gy0);
  image_gradients(next, patch_size, gx1, gy1);

  FlowField flow;
  flow.width = patch_size - 2 * half;
  flow.height = flow.width;
  flow.u.assign(static_cast<std::size_t>(flow.width) * flow.height, 0.0);
  flow.v.assign(flow.u.size(), 0.0);

  for (int cy = half; cy < patch_size - half; ++cy) {
    for (int cx = half; cx < patch_size - half; ++cx) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0, sxt = 0.0, syt = 0.0;
      for (int y = cy - half; y <= cy + half; ++y) {
        for (int x = cx - half; x <= cx + half; ++x) {
          const int i = y * patch_size + x;
          const double ix = 0.5 * (gx0[i] + gx1[i]);
          const double iy = 0.5 * (gy0[i] + gy1[i]);
          const double it = next[i] - prev[i];
          sxx += ix * ix;
          sxy += ix * iy;
          syy += iy * iy;
          sxt += ix * it;
          syt += iy * it;
        }
      }
      const double det = sxx * syy - sxy * sxy;
      if (std::abs(det) < params.min_determinant) continue;
      const std::size_t out = static_cast<std::size_t>(cy - half) * flow.width + (cx - half);
      flow.u[out] = (-syy * sxt + sxy * syt) / det;
      flow.v[out] = (sxy * sxt - sxx * syt) / det;
    }
  }
  return flow;
}

Descriptor hof_descriptor(const FlowField& flow, const HofParams& params) {
  if (flow.u.empty() || flow.u.size() != flow.v.size()) {
    throw Error("hof: empty or inconsistent flow field");
  }
  const double sector = 2.0 * std::numbers::pi / kHofDirections;
  Descriptor d{std::vector<double>(kHofBins, 0.0), DescriptorKind::kHof};
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const double magnitude = std::hypot(flow.u[i], flow.v[i]);
    if (!(magnitude >= params.motion_threshold)) {
      d.values[kHofDirections] += 1.0;
      continue;
    }
    double angle = std::atan2(flow.v[i], flow.u[i]);
    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
    int bin = static_cast<int>(angle / sector);
    if (bin >= kHofDirections) bin = kHofDirections - 1;
    d.values[bin] += magnitude;
  }
  normalize_or_uniform(d.values);
  return d;
}

Descriptor hof3d_descriptor(std::span<const double> frames, int patch_size,
                            const FlowParams& flow_params,
                            const HofParams& hof_params) {
  const std::size_t frame_len = static_cast<std::size_t>(patch_size) * patch_size;
  if (patch_size <= 0 || frames.size() % frame_len != 0 ||
      frames.size() / frame_len != kHof3dFrames) {
    throw Error("hof3d: expected 9 frames");
  }
  Descriptor d{std::vector<double>(kHofBins, 0.0), DescriptorKind::kHof3d};
  for (int t = 0; t + 1 < kHof3dFrames; ++t) {
    const auto prev = frames.subspan(t * frame_len, frame_len);
    const auto next = frames.subspan((t + 1) * frame_len, frame_len);
    const Descriptor pair = hof_descriptor(
        lucas_kanade_flow(prev, next, patch_size, flow_params), hof_params);
    for (int b = 0; b < kHofBins; ++b) d.values[b] += pair.values[b];
  }
  normalize_or_uniform(d.values);
  return d;
}

Descriptor compute_descriptor(DescriptorKind kind, std::span<const double> stack,
                              int patch_size) {
  const std::size_t frame_len = static_cast<std::size_t>(patch_size) * patch_size;
  const std::size_t needed = frame_len * frames_required(kind);
  if (stack.size() < needed) {
    throw Error("descriptor " + std::string(to_string(kind)) + " needs " +
                std::to_string(frames_required(kind)) + " frames");
  }
  switch (kind) {
    case DescriptorKind::kHog:
      return hog_descriptor(stack.first(frame_len), patch_size);
    case DescriptorKind::kHof: {
      Descriptor d = hof_descriptor(lucas_kanade_flow(
          stack.first(frame_len), stack.subspan(frame_len, frame_len), patch_size));
      return d;
    }
    case DescriptorKind::kHof3d:
      return hof3d_descriptor(stack.first(needed), patch_size);
  }
  throw Error("unknown descriptor kind");
}

}  // namespace featureless
