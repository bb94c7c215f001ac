#pragma once

#include <array>

#include "cseg/labels.hpp"
#include "cseg/rng.hpp"

namespace cseg {

/// A training sub-volume: images plus the matching labels.
struct Sample {
  ModalityStack images;
  LabelMap labels;
};

/// Rotation planes named by the pair of array axes they span.
enum class Plane { Axial, Coronal, Sagittal };  // (h,w), (d,w), (d,h)

struct AugmentConfig {
  std::array<double, 3> p_flip_axis{0.0, 0.5, 0.5};
  double p_rotate = 0.5;
  double rotate_max_deg = 10.0;
  Plane rotate_plane = Plane::Axial;
  double p_blur = 0.2;
  std::array<double, 2> blur_sigma_range{0.5, 1.0};

  void validate() const;
  static AugmentConfig disabled();
};

/// Rotates about the volume centre; images bilinear in-plane, labels nearest, zero outside.
void rotate_sample(Sample& sample, double angle_deg, Plane plane);

VolumeF rotate_image(const VolumeF& v, double angle_deg, Plane plane);
Volume<std::uint8_t> rotate_labels(const Volume<std::uint8_t>& v, double angle_deg, Plane plane);

template <class T>
void flip_axis(Volume<T>& v, int axis);

void flip_sample(Sample& sample, int axis);

/// Separable Gaussian blur with replicated borders.
VolumeF gaussian_blur(const VolumeF& v, double sigma);

/// Flips, then in-plane rotation, then image-only blur, each drawn from `rng`.
Sample augment(Sample sample, const AugmentConfig& cfg, Rng& rng);

}  // namespace cseg
