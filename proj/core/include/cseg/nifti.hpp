#pragma once

#include <cstdint>
#include <filesystem>

#include "cseg/volume.hpp"

namespace cseg {

/// On-disk voxel type for written images.
enum class NiftiType { UInt8, Int16, Float32, Float64 };

struct NiftiImage {
  VolumeF data;
  Spacing spacing;
};

/// Reads a single-file NIfTI-1 image (.nii or .nii.gz). 4D files must have a single frame.
/// Intensity scaling (scl_slope/scl_inter) is applied. Missing pixdim falls back to 1 mm.
NiftiImage read_nifti(const std::filesystem::path& path);

/// Writes a single-file NIfTI-1 image; gzip compression when the name ends in ".gz".
/// Output bytes depend only on the arguments.
void write_nifti(const std::filesystem::path& path, const VolumeF& data, Spacing spacing,
                 NiftiType type);

Volume<std::uint8_t> read_nifti_labels(const std::filesystem::path& path, Spacing* spacing = nullptr);
void write_nifti_labels(const std::filesystem::path& path, const Volume<std::uint8_t>& labels,
                        Spacing spacing);

}  // namespace cseg
