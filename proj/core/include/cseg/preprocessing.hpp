#pragma once

#include <optional>
#include <string>

#include "cseg/labels.hpp"

namespace cseg {

struct BiasCorrectionOptions {
  int degree = 3;
  int iterations = 5;
  /// Support voxels further than this many robust sigmas from the median residual are
  /// dropped from the next refit (other tissue classes, lesions).
  double outlier_sigmas = 2.5;
};

/// Smooth multiplicative field over the positive-intensity support of `volume`.
/// The log-intensities of the support are fitted with a polynomial of the given degree by
/// iteratively reweighted least squares; the exponentiated fit is scaled to mean 1 on the support.
VolumeF estimate_bias_field(const VolumeF& volume, const BiasCorrectionOptions& opts = {});

/// volume / field on the support; zero voxels stay exactly zero.
VolumeF correct_bias(const VolumeF& volume, const BiasCorrectionOptions& opts = {});

/// Zero mean, unit variance over the nonzero support; everything else set to 0.
VolumeF zscore_normalize(const VolumeF& volume);

struct PreprocessOptions {
  BiasCorrectionOptions bias;
  bool correct_bias = true;
  /// Shell command replacing the built-in correction, with `{in}` and `{out}` placeholders
  /// substituted by NIfTI paths for each modality.
  std::optional<std::string> external_bias_cmd;
};

/// Bias correction then normalization for each of the four modalities.
ModalityStack preprocess_case(const ModalityStack& images, const PreprocessOptions& opts = {});

}  // namespace cseg
