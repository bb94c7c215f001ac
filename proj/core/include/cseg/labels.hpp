#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "cseg/volume.hpp"

namespace cseg {

/// Tumor sub-regions, outermost first. ET ⊆ TC ⊆ WT.
enum class Region : std::uint8_t { WT = 0, TC = 1, ET = 2 };

inline constexpr std::array<Region, 3> kRegions = {Region::WT, Region::TC, Region::ET};

std::string_view region_name(Region r);
Region region_from_name(std::string_view name);

/// Label values: 0 background, 1 necrotic / non-enhancing core, 2 edema, 4 enhancing.
inline constexpr std::array<std::uint8_t, 4> kLabelAlphabet = {0, 1, 2, 4};

inline bool is_valid_label(int v) { return v == 0 || v == 1 || v == 2 || v == 4; }

/// Modality channel order used throughout the project.
enum class Modality : std::uint8_t { Flair = 0, T1 = 1, T1ce = 2, T2 = 3 };

inline constexpr std::array<Modality, 4> kModalities = {Modality::Flair, Modality::T1,
                                                        Modality::T1ce, Modality::T2};
std::string_view modality_name(Modality m);

struct ModalityStack {
  std::array<VolumeF, 4> channels;
  Spacing spacing;
  std::string case_id;

  [[nodiscard]] const VolumeF& operator[](Modality m) const {
    return channels[static_cast<int>(m)];
  }
  [[nodiscard]] VolumeF& operator[](Modality m) { return channels[static_cast<int>(m)]; }
  [[nodiscard]] Shape3 shape() const { return channels[0].shape(); }

  /// Throws if channels disagree in shape or spacing is non-positive.
  void validate() const;
};

struct LabelMap {
  Volume<std::uint8_t> labels;
  Spacing spacing;

  [[nodiscard]] Shape3 shape() const { return labels.shape(); }
};

struct RegionMask {
  Volume<std::uint8_t> mask;
  Region region = Region::WT;

  [[nodiscard]] Shape3 shape() const { return mask.shape(); }
  [[nodiscard]] std::size_t count() const;
};

RegionMask region_mask_from_labels(const LabelMap& labels, Region region);

/// Fuses three binary masks into one label map, clipping TC to WT and ET to the clipped TC.
LabelMap compose_labels(const RegionMask& wt, const RegionMask& tc, const RegionMask& et,
                        Spacing spacing = {});

struct HierarchyReport {
  std::map<int, std::size_t> counts;
  bool valid = true;
};

HierarchyReport validate_hierarchy(const LabelMap& labels);

}  // namespace cseg
