#include "cseg/patching.hpp"

#include <algorithm>

namespace cseg {
namespace {

void check_fits(Shape3 size, Shape3 shape) {
  for (int a = 0; a < 3; ++a) {
    if (size[a] <= 0 || size[a] > shape[a]) {
      throw Error("patch size " + size.str() + " does not fit volume " + shape.str());
    }
  }
}

}  // namespace

Sample sample_patch(const ModalityStack& images, const LabelMap& labels, Shape3 size, Rng& rng,
                    double foreground_prob) {
  const Shape3 shape = images.shape();
  require_same_shape(shape, labels.shape(), "sample_patch");
  check_fits(size, shape);

  Corner corner{};
  bool chosen = false;
  if (foreground_prob > 0.0 && uniform01(rng) < foreground_prob) {
    std::vector<std::size_t> fg;
    const auto& lab = labels.labels.data();
    for (std::size_t i = 0; i < lab.size(); ++i) {
      if (lab[i] != 0) fg.push_back(i);
    }
    if (!fg.empty()) {
      const std::size_t pick = fg[std::uniform_int_distribution<std::size_t>(0, fg.size() - 1)(rng)];
      const Corner p = {static_cast<int>(pick / (static_cast<std::size_t>(shape.h) * shape.w)),
                        static_cast<int>((pick / shape.w) % shape.h),
                        static_cast<int>(pick % shape.w)};
      for (int a = 0; a < 3; ++a) {
        const int lo = std::max(0, p[a] - size[a] + 1);
        const int hi = std::min(shape[a] - size[a], p[a]);
        corner[a] = std::uniform_int_distribution<int>(lo, hi)(rng);
      }
      chosen = true;
    }
  }
  if (!chosen) {
    for (int a = 0; a < 3; ++a) {
      corner[a] = std::uniform_int_distribution<int>(0, shape[a] - size[a])(rng);
    }
  }

  Sample out;
  out.images.case_id = images.case_id;
  out.images.spacing = images.spacing;
  for (int c = 0; c < 4; ++c) out.images.channels[c] = crop(images.channels[c], corner, size);
  out.labels.spacing = labels.spacing;
  out.labels.labels = crop(labels.labels, corner, size);
  return out;
}

std::vector<Corner> grid_patches(Shape3 shape, Shape3 size, Shape3 stride) {
  check_fits(size, shape);
  std::array<std::vector<int>, 3> per_axis;
  for (int a = 0; a < 3; ++a) {
    if (stride[a] <= 0 || stride[a] > size[a]) {
      throw Error("grid_patches: stride must satisfy 0 < stride <= size on every axis");
    }
    for (int c = 0;; c += stride[a]) {
      const int clamped = std::min(c, shape[a] - size[a]);
      if (per_axis[a].empty() || per_axis[a].back() != clamped) per_axis[a].push_back(clamped);
      if (clamped + size[a] >= shape[a]) break;
    }
  }
  std::vector<Corner> corners;
  for (int z : per_axis[0]) {
    for (int y : per_axis[1]) {
      for (int x : per_axis[2]) corners.push_back({z, y, x});
    }
  }
  return corners;
}

PatchAssembler::PatchAssembler(Shape3 shape) : mean_(shape), counts_(shape) {}

void PatchAssembler::add(const VolumeF& patch, const Corner& corner) {
  const Shape3 ps = patch.shape();
  const Shape3 s = mean_.shape();
  for (int a = 0; a < 3; ++a) {
    if (corner[a] < 0 || corner[a] + ps[a] > s[a]) throw Error("assemble: patch outside volume");
  }
  for (int z = 0; z < ps.d; ++z) {
    for (int y = 0; y < ps.h; ++y) {
      for (int x = 0; x < ps.w; ++x) {
        const std::size_t i = mean_.index(z + corner[0], y + corner[1], x + corner[2]);
        counts_[i] += 1;
        // Running mean: identical contributions reproduce the value exactly.
        mean_[i] += (patch(z, y, x) - mean_[i]) / counts_[i];
      }
    }
  }
}

VolumeF PatchAssembler::finish() const {
  VolumeF out(mean_.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (counts_[i] == 0) throw Error("assemble: voxel " + std::to_string(i) + " not covered by any patch");
    out[i] = mean_[i];
  }
  return out;
}

VolumeF assemble(const std::vector<VolumeF>& patches, const std::vector<Corner>& corners,
                 Shape3 shape) {
  if (patches.size() != corners.size()) throw Error("assemble: patches and corners differ in count");
  PatchAssembler acc(shape);
  for (std::size_t i = 0; i < patches.size(); ++i) acc.add(patches[i], corners[i]);
  return acc.finish();
}

}  // namespace cseg
