#pragma once

#include <array>

#include "cseg/cascade.hpp"
#include "cseg/config.hpp"
#include "cseg/labels.hpp"

namespace cseg {

/// mask = prob > tau.
RegionMask binarize(const VolumeF& prob, double tau, Region region);

struct Prediction {
  LabelMap labels;
  std::array<VolumeF, 3> probs;  // assembled main outputs of the three steps (WT, TC, ET)
};

/// Patch extent actually used for a volume: the configured size, shrunk on axes where the volume
/// is smaller to the largest extent the network accepts.
Shape3 effective_patch_size(Shape3 volume, Shape3 patch, int divisor);

/// Sliding-window cascade prediction, overlap-averaged, thresholded and fused.
Prediction predict_case(CascadeModel& model, const ModalityStack& images, const InferConfig& cfg);

}  // namespace cseg
