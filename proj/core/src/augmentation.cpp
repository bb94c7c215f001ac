#include "cseg/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cseg {
namespace {

std::array<int, 2> plane_axes(Plane p) {
  switch (p) {
    case Plane::Axial: return {1, 2};
    case Plane::Coronal: return {0, 2};
    case Plane::Sagittal: return {0, 1};
  }
  throw Error("augment: invalid rotation plane");
}

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

/// Calls fn(out_index, src_a, src_b, fixed) for every voxel, where (src_a, src_b) is the
/// in-plane source coordinate for the inverse rotation.
template <class Fn>
void for_each_rotated(Shape3 s, double angle_deg, Plane plane, Fn&& fn) {
  const auto [ax_a, ax_b] = plane_axes(plane);
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), sn = std::sin(theta);
  const double ca = (s[ax_a] - 1) / 2.0, cb = (s[ax_b] - 1) / 2.0;
  std::array<int, 3> p{};
  for (p[0] = 0; p[0] < s.d; ++p[0]) {
    for (p[1] = 0; p[1] < s.h; ++p[1]) {
      for (p[2] = 0; p[2] < s.w; ++p[2]) {
        const double da = p[ax_a] - ca, db = p[ax_b] - cb;
        const double src_a = ca + c * da + sn * db;
        const double src_b = cb - sn * da + c * db;
        fn(p, src_a, src_b, ax_a, ax_b);
      }
    }
  }
}

}  // namespace

void AugmentConfig::validate() const {
  for (double p : p_flip_axis) {
    if (!in_unit(p)) throw Error("augment: flip probabilities must be in [0,1]");
  }
  if (!in_unit(p_rotate) || !in_unit(p_blur)) throw Error("augment: probabilities must be in [0,1]");
  if (!(rotate_max_deg > 0.0 && rotate_max_deg <= 180.0)) {
    throw Error("augment: rotate_max_deg must be in (0,180]");
  }
  if (!(blur_sigma_range[0] > 0.0) || blur_sigma_range[0] > blur_sigma_range[1]) {
    throw Error("augment: blur sigmas must be positive and ordered");
  }
}

AugmentConfig AugmentConfig::disabled() {
  AugmentConfig c;
  c.p_flip_axis = {0.0, 0.0, 0.0};
  c.p_rotate = 0.0;
  c.p_blur = 0.0;
  return c;
}

VolumeF rotate_image(const VolumeF& v, double angle_deg, Plane plane) {
  if (angle_deg == 0.0) return v;
  const Shape3 s = v.shape();
  VolumeF out(s);
  for_each_rotated(s, angle_deg, plane, [&](const std::array<int, 3>& p, double sa, double sb,
                                            int ax_a, int ax_b) {
    const int a0 = static_cast<int>(std::floor(sa));
    const int b0 = static_cast<int>(std::floor(sb));
    const double fa = sa - a0, fb = sb - b0;
    double acc = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double w = (i ? fa : 1.0 - fa) * (j ? fb : 1.0 - fb);
        if (w == 0.0) continue;
        std::array<int, 3> q = p;
        q[ax_a] = a0 + i;
        q[ax_b] = b0 + j;
        if (q[ax_a] < 0 || q[ax_a] >= s[ax_a] || q[ax_b] < 0 || q[ax_b] >= s[ax_b]) continue;
        acc += w * v(q[0], q[1], q[2]);
      }
    }
    out(p[0], p[1], p[2]) = acc;
  });
  return out;
}

Volume<std::uint8_t> rotate_labels(const Volume<std::uint8_t>& v, double angle_deg, Plane plane) {
  if (angle_deg == 0.0) return v;
  const Shape3 s = v.shape();
  Volume<std::uint8_t> out(s);
  for_each_rotated(s, angle_deg, plane, [&](const std::array<int, 3>& p, double sa, double sb,
                                            int ax_a, int ax_b) {
    std::array<int, 3> q = p;
    q[ax_a] = static_cast<int>(std::floor(sa + 0.5));
    q[ax_b] = static_cast<int>(std::floor(sb + 0.5));
    if (q[ax_a] < 0 || q[ax_a] >= s[ax_a] || q[ax_b] < 0 || q[ax_b] >= s[ax_b]) return;
    out(p[0], p[1], p[2]) = v(q[0], q[1], q[2]);
  });
  return out;
}

void rotate_sample(Sample& sample, double angle_deg, Plane plane) {
  if (!std::isfinite(angle_deg)) throw Error("augment: rotation angle must be finite");
  for (auto& ch : sample.images.channels) ch = rotate_image(ch, angle_deg, plane);
  sample.labels.labels = rotate_labels(sample.labels.labels, angle_deg, plane);
}

template <class T>
void flip_axis(Volume<T>& v, int axis) {
  const Shape3 s = v.shape();
  if (axis < 0 || axis > 2) throw Error("flip: axis must be 0, 1 or 2");
  for (int z = 0; z < s.d; ++z) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        std::array<int, 3> q = {z, y, x};
        q[axis] = s[axis] - 1 - q[axis];
        const std::size_t i = v.index(z, y, x), j = v.index(q[0], q[1], q[2]);
        if (i < j) std::swap(v[i], v[j]);
      }
    }
  }
}

template void flip_axis<double>(Volume<double>&, int);
template void flip_axis<std::uint8_t>(Volume<std::uint8_t>&, int);

void flip_sample(Sample& sample, int axis) {
  for (auto& ch : sample.images.channels) flip_axis(ch, axis);
  flip_axis(sample.labels.labels, axis);
}

VolumeF gaussian_blur(const VolumeF& v, double sigma) {
  if (!(sigma > 0.0)) throw Error("blur: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  const Shape3 s = v.shape();
  VolumeF cur = v;
  VolumeF next(s);
  for (int axis = 0; axis < 3; ++axis) {
    const int n = s[axis];
    for (int z = 0; z < s.d; ++z) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          std::array<int, 3> q = {z, y, x};
          const int c = q[axis];
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            q[axis] = std::clamp(c + k, 0, n - 1);
            acc += kernel[k + radius] * cur(q[0], q[1], q[2]);
          }
          next(z, y, x) = acc;
        }
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

Sample augment(Sample sample, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  for (const auto& ch : sample.images.channels) {
    require_same_shape(ch.shape(), sample.labels.shape(), "augment");
  }
  for (int axis = 0; axis < 3; ++axis) {
    if (uniform01(rng) < cfg.p_flip_axis[axis]) flip_sample(sample, axis);
  }
  if (uniform01(rng) < cfg.p_rotate) {
    const double angle =
        std::uniform_real_distribution<double>(-cfg.rotate_max_deg, cfg.rotate_max_deg)(rng);
    rotate_sample(sample, angle, cfg.rotate_plane);
  }
  if (uniform01(rng) < cfg.p_blur) {
    const double sigma = std::uniform_real_distribution<double>(cfg.blur_sigma_range[0],
                                                                cfg.blur_sigma_range[1])(rng);
    for (auto& ch : sample.images.channels) ch = gaussian_blur(ch, sigma);
  }
  return sample;
}

}  // namespace cseg
