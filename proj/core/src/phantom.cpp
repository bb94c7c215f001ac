#include "cseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cseg/polynomial.hpp"

namespace cseg {
namespace {

struct Ellipsoid {
  std::array<double, 3> center{};
  std::array<double, 3> axes{};

  [[nodiscard]] bool contains(double z, double y, double x) const {
    const double dz = (z - center[0]) / axes[0];
    const double dy = (y - center[1]) / axes[1];
    const double dx = (x - center[2]) / axes[2];
    return dz * dz + dy * dy + dx * dx <= 1.0;
  }
};

void check_range(const std::array<double, 2>& r, double lo, double hi, bool open, const char* name) {
  const bool ok = open ? (r[0] > lo && r[1] < hi) : (r[0] >= lo && r[1] <= hi);
  if (!ok || r[0] > r[1]) throw Error(std::string("phantom: invalid ") + name);
}

std::array<double, 3> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    std::array<double, 3> v = {n(rng), n(rng), n(rng)};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-12) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

/// A child scaled by `scale` whose centre is offset so it stays inside `parent`.
Ellipsoid nested(const Ellipsoid& parent, double scale, std::mt19937_64& rng) {
  Ellipsoid child;
  const auto dir = random_unit(rng);
  const double mag = std::uniform_real_distribution<double>(0.0, 0.5 * (1.0 - scale))(rng);
  for (int a = 0; a < 3; ++a) {
    child.axes[a] = parent.axes[a] * scale;
    child.center[a] = parent.center[a] + parent.axes[a] * dir[a] * mag;
  }
  return child;
}

}  // namespace

void BiasFieldSpec::validate() const {
  if (degree < 0 || degree > 3) throw Error("bias field: degree must be in [0,3]");
  if (!(amplitude >= 0.0 && amplitude <= 0.5)) throw Error("bias field: amplitude must be in [0,0.5]");
  const std::size_t n = monomial_exponents(degree).size() - 1;
  if (coefficients.size() != n) {
    throw Error("bias field: expected " + std::to_string(n) + " coefficients, got " +
                std::to_string(coefficients.size()));
  }
}

BiasFieldSpec BiasFieldSpec::random(int degree, double amplitude, std::uint64_t seed) {
  BiasFieldSpec spec;
  spec.degree = degree;
  spec.amplitude = amplitude;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = monomial_exponents(degree).size() - 1;
  for (std::size_t i = 0; i < n; ++i) spec.coefficients.push_back(u(rng));
  spec.validate();
  return spec;
}

void PhantomParams::validate() const {
  if (volume_shape.d < 32 || volume_shape.h < 32 || volume_shape.w < 32) {
    throw Error("phantom: every volume dimension must be >= 32");
  }
  if (!(wt_radius_range[0] > 0.0) || wt_radius_range[0] > wt_radius_range[1]) {
    throw Error("phantom: invalid wt_radius_range");
  }
  check_range(tc_scale_range, 0.0, 1.0, true, "tc_scale_range");
  check_range(et_scale_range, 0.0, 1.0, true, "et_scale_range");
  if (!(noise_sigma >= 0.0)) throw Error("phantom: noise_sigma must be >= 0");
  if (bias) bias->validate();
}

PhantomParams PhantomParams::defaults_for(Shape3 shape) {
  PhantomParams p;
  p.volume_shape = shape;
  const int smallest = std::min({shape.d, shape.h, shape.w});
  const double k = smallest / 96.0;
  p.wt_radius_range = {p.wt_radius_range[0] * k, p.wt_radius_range[1] * k};
  return p;
}

VolumeF bias_field(Shape3 shape, const BiasFieldSpec& spec) {
  spec.validate();
  VolumeF field(shape, 1.0);
  if (spec.amplitude == 0.0) return field;

  const auto exps = monomial_exponents(spec.degree);
  const AxisNormalizer nz{0.0, shape.d - 1.0}, ny{0.0, shape.h - 1.0}, nx{0.0, shape.w - 1.0};
  std::vector<double> basis;
  double sum = 0.0;
  for (int z = 0; z < shape.d; ++z) {
    for (int y = 0; y < shape.h; ++y) {
      for (int x = 0; x < shape.w; ++x) {
        eval_monomials(exps, nz(z), ny(y), nx(x), basis);
        double p = 0.0;
        for (std::size_t t = 1; t < basis.size(); ++t) p += spec.coefficients[t - 1] * basis[t];
        field(z, y, x) = p;
        sum += p;
      }
    }
  }
  const double mean = sum / static_cast<double>(field.size());
  double peak = 0.0;
  for (double& v : field.data()) {
    v -= mean;
    peak = std::max(peak, std::fabs(v));
  }
  for (double& v : field.data()) v = peak > 0.0 ? 1.0 + spec.amplitude * v / peak : 1.0;
  return field;
}

VolumeF inject_bias_field(const VolumeF& volume, const BiasFieldSpec& spec) {
  if (spec.amplitude == 0.0) {
    spec.validate();
    return volume;
  }
  const VolumeF field = bias_field(volume.shape(), spec);
  VolumeF out(volume.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = volume[i] * field[i];
  return out;
}

PhantomCase generate_case(const PhantomParams& params) {
  params.validate();
  const Shape3 s = params.volume_shape;
  std::mt19937_64 rng(params.seed);

  Ellipsoid brain;
  for (int a = 0; a < 3; ++a) {
    brain.center[a] = (s[a] - 1) / 2.0;
    brain.axes[a] = 0.42 * s[a];
  }

  std::uniform_real_distribution<double> radius(params.wt_radius_range[0], params.wt_radius_range[1]);
  Ellipsoid wt;
  for (int a = 0; a < 3; ++a) wt.axes[a] = radius(rng);
  const double rmax = *std::max_element(wt.axes.begin(), wt.axes.end());

  // Any centre inside the brain ellipsoid shrunk by rmax keeps the tumor inside the brain.
  std::array<double, 3> room{};
  for (int a = 0; a < 3; ++a) {
    room[a] = brain.axes[a] - rmax;
    if (room[a] <= 0.0) {
      throw Error("phantom: tumor of radius " + std::to_string(rmax) +
                  " cannot fit in volume " + s.str());
    }
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (;;) {
    const std::array<double, 3> u = {unit(rng), unit(rng), unit(rng)};
    if (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] <= 1.0) {
      for (int a = 0; a < 3; ++a) wt.center[a] = brain.center[a] + u[a] * room[a];
      break;
    }
  }
  const double tc_scale =
      std::uniform_real_distribution<double>(params.tc_scale_range[0], params.tc_scale_range[1])(rng);
  const Ellipsoid tc = nested(wt, tc_scale, rng);
  const double et_scale =
      std::uniform_real_distribution<double>(params.et_scale_range[0], params.et_scale_range[1])(rng);
  const Ellipsoid et = nested(tc, et_scale, rng);

  PhantomCase out;
  out.images.case_id = params.case_id;
  out.images.spacing = Spacing{};
  out.labels.spacing = Spacing{};
  out.labels.labels = Volume<std::uint8_t>(s);
  Volume<std::uint8_t> tissue(s);  // 0 outside, 1 brain, 2 edema, 3 core, 4 enhancing
  for (int z = 0; z < s.d; ++z) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        std::uint8_t t = 0, label = 0;
        if (et.contains(z, y, x)) {
          t = 4; label = 4;
        } else if (tc.contains(z, y, x)) {
          t = 3; label = 1;
        } else if (wt.contains(z, y, x)) {
          t = 2; label = 2;
        } else if (brain.contains(z, y, x)) {
          t = 1;
        }
        tissue(z, y, x) = t;
        out.labels.labels(z, y, x) = label;
      }
    }
  }

  const VolumeF field = params.bias ? bias_field(s, *params.bias) : VolumeF(s, 1.0);
  std::normal_distribution<double> noise(0.0, params.noise_sigma * TissueContrast::kBrainMean);
  for (Modality m : kModalities) {
    const auto& row = TissueContrast::kTable[static_cast<int>(m)];
    VolumeF v(s);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::uint8_t t = tissue[i];
      if (t == 0) continue;
      double value = TissueContrast::kBrainMean * row[t - 1] * field[i];
      if (params.noise_sigma > 0.0) value += noise(rng);
      v[i] = std::max(value, 1e-3);
    }
    out.images[m] = std::move(v);
  }
  return out;
}

}  // namespace cseg
