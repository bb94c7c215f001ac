#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cseg/labels.hpp"

namespace cseg {

/// Smooth multiplicative intensity field: 1 + amplitude * (normalized polynomial).
struct BiasFieldSpec {
  int degree = 2;
  /// One coefficient per non-constant monomial of `monomial_exponents(degree)`.
  std::vector<double> coefficients;
  double amplitude = 0.0;

  void validate() const;
  static BiasFieldSpec random(int degree, double amplitude, std::uint64_t seed);
};

struct PhantomParams {
  Shape3 volume_shape{96, 96, 96};
  std::array<double, 2> wt_radius_range{14.0, 26.0};  // voxels
  std::array<double, 2> tc_scale_range{0.55, 0.8};    // fraction of the WT semi-axes
  std::array<double, 2> et_scale_range{0.45, 0.7};    // fraction of the TC semi-axes
  double noise_sigma = 0.05;                          // relative to brain-tissue mean
  std::optional<BiasFieldSpec> bias;
  std::uint64_t seed = 0;
  std::string case_id = "phantom";

  void validate() const;

  /// Defaults with the WT radius range rescaled from the 96-voxel reference to `shape`.
  static PhantomParams defaults_for(Shape3 shape);
};

struct PhantomCase {
  ModalityStack images;
  LabelMap labels;
};

/// Mean tissue intensity per modality (flair, t1, t1ce, t2) for brain, edema, core, enhancing.
struct TissueContrast {
  static constexpr double kBrainMean = 100.0;
  static constexpr std::array<std::array<double, 4>, 4> kTable = {{
      // brain, edema(2), core(1), enhancing(4)
      {1.0, 2.2, 1.6, 1.5},    // flair
      {1.0, 0.8, 0.7, 0.9},    // t1
      {1.0, 1.15, 1.9, 2.6},   // t1ce
      {1.0, 1.6, 1.4, 1.3},    // t2
  }};
};

/// Nested-ellipsoid tumor inside an ellipsoidal brain, zero outside the brain.
/// A pure function of `params`.
PhantomCase generate_case(const PhantomParams& params);

/// The field itself, sampled on `shape`; strictly positive with mean 1.
VolumeF bias_field(Shape3 shape, const BiasFieldSpec& spec);

/// volume * bias_field(spec). Amplitude 0 returns the input unchanged.
VolumeF inject_bias_field(const VolumeF& volume, const BiasFieldSpec& spec);

}  // namespace cseg
