#pragma once

#include <array>
#include <vector>

#include "cseg/augmentation.hpp"

namespace cseg {

using Corner = std::array<int, 3>;

/// Crops `size` at a uniformly random corner. With probability `foreground_prob` the corner is
/// instead drawn so that a uniformly chosen tumor voxel lies inside the patch.
Sample sample_patch(const ModalityStack& images, const LabelMap& labels, Shape3 size, Rng& rng,
                    double foreground_prob = 0.0);

/// Corners of a regular grid covering `shape`; the last corner on each axis is clamped so its
/// patch ends at the boundary.
std::vector<Corner> grid_patches(Shape3 shape, Shape3 size, Shape3 stride);

/// Uniform average of overlapping patches (sum / count per voxel).
class PatchAssembler {
 public:
  explicit PatchAssembler(Shape3 shape);

  void add(const VolumeF& patch, const Corner& corner);
  [[nodiscard]] const Volume<int>& counts() const { return counts_; }
  /// Throws if any voxel was never covered.
  [[nodiscard]] VolumeF finish() const;

 private:
  VolumeF mean_;
  Volume<int> counts_;
};

VolumeF assemble(const std::vector<VolumeF>& patches, const std::vector<Corner>& corners,
                 Shape3 shape);

}  // namespace cseg
