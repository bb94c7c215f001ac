#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cseg/labels.hpp"

namespace cseg {

/// Metric value, or std::nullopt where it is undefined (empty denominators or surfaces).
using MaybeValue = std::optional<double>;

struct MetricsRecord {
  std::string case_id;
  Region region = Region::WT;
  double dice = 0.0;
  MaybeValue sensitivity;
  MaybeValue specificity;
  MaybeValue hausdorff_mm;
};

/// 2|P1 & T1| / (|P1| + |T1|); 1 when both masks are empty.
double dice(const RegionMask& pred, const RegionMask& truth);
/// |P1 & T1| / |T1|; undefined for empty truth.
MaybeValue sensitivity(const RegionMask& pred, const RegionMask& truth);
/// |P0 & T0| / |T0|; undefined when truth has no background.
MaybeValue specificity(const RegionMask& pred, const RegionMask& truth);

/// Foreground voxels with a face neighbour in background or outside the volume.
Volume<std::uint8_t> surface_voxels(const Volume<std::uint8_t>& mask);

/// Squared Euclidean distance (mm^2) from every voxel to the nearest nonzero voxel of `seeds`.
/// Exact; separable lower-envelope transform. Infinity everywhere when `seeds` is empty.
VolumeF squared_distance_transform(const Volume<std::uint8_t>& seeds, Spacing spacing);

/// Symmetric surface Hausdorff distance. percentile=100 is the classic max of the two directed
/// sup-inf distances; smaller percentiles take that quantile of each directed distance set.
/// Undefined when either mask is empty.
MaybeValue hausdorff(const RegionMask& pred, const RegionMask& truth, Spacing spacing,
                     double percentile = 100.0);

/// Linear interpolation between order statistics: position (n - 1) * q / 100 of the sorted data.
double percentile_linear(std::vector<double> values, double q);

std::array<MetricsRecord, 3> evaluate_case(const LabelMap& pred, const LabelMap& truth,
                                           const std::string& case_id, double hd_percentile = 100.0);

enum class Metric { Dice, Sensitivity, Specificity, Hausdorff };
inline constexpr std::array<Metric, 4> kMetrics = {Metric::Dice, Metric::Sensitivity,
                                                    Metric::Specificity, Metric::Hausdorff};
std::string_view metric_name(Metric m);
MaybeValue metric_value(const MetricsRecord& r, Metric m);

/// The numbers a boxplot draws, plus the mean.
struct BoxStats {
  std::size_t count = 0;      // defined values
  std::size_t undefined = 0;  // records where the metric was undefined
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // smallest value >= q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest value <= q3 + 1.5 IQR
  std::size_t outliers = 0;
};

BoxStats box_stats(const std::vector<double>& values, std::size_t undefined = 0);

struct SummaryRow {
  Region region = Region::WT;
  std::array<BoxStats, 4> stats;  // indexed like kMetrics
};

/// One row per region present in `records`, in WT/TC/ET order.
std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records);

// CSV I/O --------------------------------------------------------------------------------------

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                       const std::string& dataset);

}  // namespace cseg
