#include "cseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Counts confusion(const RegionMask& pred, const RegionMask& truth) {
  require_same_shape(pred.shape(), truth.shape(), "metrics");
  Counts c;
  const auto& p = pred.mask.data();
  const auto& t = truth.mask.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pi = p[i] != 0, ti = t[i] != 0;
    if (pi && ti) ++c.tp;
    else if (pi) ++c.fp;
    else if (ti) ++c.fn;
    else ++c.tn;
  }
  return c;
}

/// 1D squared distance transform along a line: out[q] = min_p f[p] + ((q - p) * step)^2.
void edt_1d(const std::vector<double>& f, double step, std::vector<double>& out,
            std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  out.assign(n, kInf);
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  auto intersect = [&](int q, int p) {
    const double xq = q * step, xp = p * step;
    return ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
  };
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      if (k < 0) break;
      s = intersect(q, v[k]);
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q * step) ++j;
    const double d = (q - v[j]) * step;
    out[q] = f[v[j]] + d * d;
  }
}

std::vector<double> directed_distances(const Volume<std::uint8_t>& from, const VolumeF& dt2) {
  std::vector<double> d;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i]) d.push_back(std::sqrt(dt2[i]));
  }
  return d;
}

double reduce_percentile(std::vector<double> d, double percentile) {
  if (percentile >= 100.0) return *std::max_element(d.begin(), d.end());
  return percentile_linear(std::move(d), percentile);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(const MaybeValue& v) { return v ? fmt(*v) : "nan"; }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error("metrics csv: bad number '" + s + "' in " + path.string());
  return v;
}

MaybeValue maybe(double v) { return std::isnan(v) ? MaybeValue{} : MaybeValue{v}; }

}  // namespace

double dice(const RegionMask& pred, const RegionMask& truth) {
  const Counts c = confusion(pred, truth);
  const std::size_t denom = (c.tp + c.fp) + (c.tp + c.fn);
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

MaybeValue sensitivity(const RegionMask& pred, const RegionMask& truth) {
  const Counts c = confusion(pred, truth);
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

MaybeValue specificity(const RegionMask& pred, const RegionMask& truth) {
  const Counts c = confusion(pred, truth);
  if (c.tn + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

Volume<std::uint8_t> surface_voxels(const Volume<std::uint8_t>& mask) {
  const Shape3 s = mask.shape();
  Volume<std::uint8_t> out(s);
  static constexpr int kOffsets[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                         {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
  for (int z = 0; z < s.d; ++z) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        if (!mask(z, y, x)) continue;
        for (const auto& o : kOffsets) {
          const int nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (nz < 0 || ny < 0 || nx < 0 || nz >= s.d || ny >= s.h || nx >= s.w || !mask(nz, ny, nx)) {
            out(z, y, x) = 1;
            break;
          }
        }
      }
    }
  }
  return out;
}

VolumeF squared_distance_transform(const Volume<std::uint8_t>& seeds, Spacing spacing) {
  if (!spacing.valid()) throw Error("distance transform: spacing must be positive");
  const Shape3 s = seeds.shape();
  VolumeF dt(s);
  for (std::size_t i = 0; i < dt.size(); ++i) dt[i] = seeds[i] ? 0.0 : kInf;

  std::vector<double> line, out, z;
  std::vector<int> v;
  // Width first, then height, then depth.
  for (int axis = 2; axis >= 0; --axis) {
    const int n = s[axis];
    const double step = spacing[axis];
    std::array<int, 3> p{};
    const int a1 = axis == 0 ? 1 : 0, a2 = axis == 2 ? 1 : 2;
    for (p[a1] = 0; p[a1] < s[a1]; ++p[a1]) {
      for (p[a2] = 0; p[a2] < s[a2]; ++p[a2]) {
        line.resize(n);
        for (p[axis] = 0; p[axis] < n; ++p[axis]) line[p[axis]] = dt(p[0], p[1], p[2]);
        edt_1d(line, step, out, v, z);
        for (p[axis] = 0; p[axis] < n; ++p[axis]) dt(p[0], p[1], p[2]) = out[p[axis]];
      }
    }
  }
  return dt;
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of empty data");
  if (!(q >= 0.0 && q <= 100.0)) throw Error("percentile must be in [0,100]");
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

MaybeValue hausdorff(const RegionMask& pred, const RegionMask& truth, Spacing spacing,
                     double percentile) {
  require_same_shape(pred.shape(), truth.shape(), "hausdorff");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw Error("hausdorff: percentile must be in (0,100]");
  if (pred.count() == 0 || truth.count() == 0) return std::nullopt;
  const auto sp = surface_voxels(pred.mask);
  const auto st = surface_voxels(truth.mask);
  const auto d_pt = directed_distances(sp, squared_distance_transform(st, spacing));
  const auto d_tp = directed_distances(st, squared_distance_transform(sp, spacing));
  return std::max(reduce_percentile(d_pt, percentile), reduce_percentile(d_tp, percentile));
}

std::array<MetricsRecord, 3> evaluate_case(const LabelMap& pred, const LabelMap& truth,
                                           const std::string& case_id, double hd_percentile) {
  require_same_shape(pred.shape(), truth.shape(), "evaluate_case");
  std::array<MetricsRecord, 3> out;
  for (int k = 0; k < 3; ++k) {
    const Region r = kRegions[k];
    const RegionMask p = region_mask_from_labels(pred, r);
    const RegionMask t = region_mask_from_labels(truth, r);
    out[k].case_id = case_id;
    out[k].region = r;
    out[k].dice = dice(p, t);
    out[k].sensitivity = sensitivity(p, t);
    out[k].specificity = specificity(p, t);
    out[k].hausdorff_mm = hausdorff(p, t, truth.spacing, hd_percentile);
  }
  return out;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Dice: return "dice";
    case Metric::Sensitivity: return "sensitivity";
    case Metric::Specificity: return "specificity";
    case Metric::Hausdorff: return "hausdorff";
  }
  return "?";
}

MaybeValue metric_value(const MetricsRecord& r, Metric m) {
  switch (m) {
    case Metric::Dice: return r.dice;
    case Metric::Sensitivity: return r.sensitivity;
    case Metric::Specificity: return r.specificity;
    case Metric::Hausdorff: return r.hausdorff_mm;
  }
  return std::nullopt;
}

BoxStats box_stats(const std::vector<double>& values, std::size_t undefined) {
  BoxStats b;
  b.count = values.size();
  b.undefined = undefined;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    b.mean = b.median = b.q1 = b.q3 = b.whisker_low = b.whisker_high = nan;
    return b;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  b.mean = sum / static_cast<double>(values.size());
  b.median = percentile_linear(values, 50.0);
  b.q1 = percentile_linear(values, 25.0);
  b.q3 = percentile_linear(values, 75.0);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = kInf;
  b.whisker_high = -kInf;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      ++b.outliers;
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, v);
    b.whisker_high = std::max(b.whisker_high, v);
  }
  return b;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw Error("summarize: no records");
  std::vector<SummaryRow> rows;
  for (Region r : kRegions) {
    std::array<std::vector<double>, 4> values;
    std::array<std::size_t, 4> undefined{};
    bool any = false;
    for (const auto& rec : records) {
      if (rec.region != r) continue;
      any = true;
      for (int m = 0; m < 4; ++m) {
        const MaybeValue v = metric_value(rec, kMetrics[m]);
        if (v) values[m].push_back(*v);
        else ++undefined[m];
      }
    }
    if (!any) continue;
    SummaryRow row;
    row.region = r;
    for (int m = 0; m < 4; ++m) row.stats[m] = box_stats(values[m], undefined[m]);
    rows.push_back(row);
  }
  return rows;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "case_id,region,dice,sensitivity,specificity,hausdorff,hausdorff_defined\n";
  for (const auto& r : records) {
    os << r.case_id << ',' << region_name(r.region) << ',' << fmt(r.dice) << ','
       << fmt(r.sensitivity) << ',' << fmt(r.specificity) << ','
       << (r.hausdorff_mm ? fmt(*r.hausdorff_mm) : "nan") << ',' << (r.hausdorff_mm ? 1 : 0) << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) ||
      line != "case_id,region,dice,sensitivity,specificity,hausdorff,hausdorff_defined") {
    throw Error("metrics csv: unexpected header in " + path.string());
  }
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) throw Error("metrics csv: expected 7 columns in " + path.string());
    MetricsRecord r;
    r.case_id = cells[0];
    r.region = region_from_name(cells[1]);
    r.dice = parse_double(cells[2], path);
    r.sensitivity = maybe(parse_double(cells[3], path));
    r.specificity = maybe(parse_double(cells[4], path));
    if (cells[6] == "1") r.hausdorff_mm = parse_double(cells[5], path);
    else if (cells[6] != "0") throw Error("metrics csv: hausdorff_defined must be 0 or 1");
    out.push_back(r);
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                       const std::string& dataset) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "dataset,region";
  for (Metric m : kMetrics) {
    const std::string n(metric_name(m));
    os << ',' << n << "_mean," << n << "_median," << n << "_q1," << n << "_q3," << n
       << "_whisker_low," << n << "_whisker_high," << n << "_outliers," << n << "_n," << n
       << "_undefined";
  }
  os << '\n';
  for (const auto& row : rows) {
    os << dataset << ',' << region_name(row.region);
    for (const auto& b : row.stats) {
      os << ',' << fmt(b.mean) << ',' << fmt(b.median) << ',' << fmt(b.q1) << ',' << fmt(b.q3)
         << ',' << fmt(b.whisker_low) << ',' << fmt(b.whisker_high) << ',' << b.outliers << ','
         << b.count << ',' << b.undefined;
    }
    os << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

}  // namespace cseg
