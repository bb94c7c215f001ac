#include "cseg/labels.hpp"

#include <algorithm>

namespace cseg {

std::string_view region_name(Region r) {
  switch (r) {
    case Region::WT: return "WT";
    case Region::TC: return "TC";
    case Region::ET: return "ET";
  }
  throw Error("unknown region enum value " + std::to_string(static_cast<int>(r)));
}

Region region_from_name(std::string_view name) {
  if (name == "WT") return Region::WT;
  if (name == "TC") return Region::TC;
  if (name == "ET") return Region::ET;
  throw Error("unknown region name '" + std::string(name) + "'");
}

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Flair: return "flair";
    case Modality::T1: return "t1";
    case Modality::T1ce: return "t1ce";
    case Modality::T2: return "t2";
  }
  throw Error("unknown modality enum value");
}

void ModalityStack::validate() const {
  for (const auto& c : channels) require_same_shape(c.shape(), channels[0].shape(), "modality stack");
  if (!spacing.valid()) throw Error("modality stack: spacing must be strictly positive");
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(mask.data().begin(), mask.data().end(), 1));
}

RegionMask region_mask_from_labels(const LabelMap& labels, Region region) {
  auto in_region = [region](std::uint8_t v) -> std::uint8_t {
    switch (region) {
      case Region::WT: return v == 1 || v == 2 || v == 4;
      case Region::TC: return v == 1 || v == 4;
      case Region::ET: return v == 4;
    }
    throw Error("unknown region enum value " + std::to_string(static_cast<int>(region)));
  };
  // Resolve the enum once so an invalid value throws even on empty maps.
  (void)in_region(0);
  RegionMask out{Volume<std::uint8_t>(labels.shape()), region};
  const auto& src = labels.labels.data();
  auto& dst = out.mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = in_region(src[i]);
  return out;
}

LabelMap compose_labels(const RegionMask& wt, const RegionMask& tc, const RegionMask& et,
                        Spacing spacing) {
  require_same_shape(wt.shape(), tc.shape(), "compose_labels");
  require_same_shape(wt.shape(), et.shape(), "compose_labels");
  LabelMap out{Volume<std::uint8_t>(wt.shape()), spacing};
  const auto& w = wt.mask.data();
  const auto& t = tc.mask.data();
  const auto& e = et.mask.data();
  auto& dst = out.labels.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const bool in_wt = w[i] != 0;
    const bool in_tc = in_wt && t[i] != 0;
    const bool in_et = in_tc && e[i] != 0;
    dst[i] = in_et ? 4 : in_tc ? 1 : in_wt ? 2 : 0;
  }
  return out;
}

HierarchyReport validate_hierarchy(const LabelMap& labels) {
  HierarchyReport report;
  for (std::uint8_t v : labels.labels.data()) {
    ++report.counts[v];
    if (!is_valid_label(v)) report.valid = false;
  }
  return report;
}

}  // namespace cseg
