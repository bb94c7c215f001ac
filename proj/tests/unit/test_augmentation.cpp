#include <gtest/gtest.h>

#include <set>

#include "cseg/augmentation.hpp"
#include "cseg/phantom.hpp"
#include "oracles.hpp"

using namespace cseg;

namespace {

Sample phantom_sample(std::uint64_t seed) {
  auto p = PhantomParams::defaults_for({32, 32, 32});
  p.seed = seed;
  auto c = generate_case(p);
  return {std::move(c.images), std::move(c.labels)};
}

std::set<int> alphabet(const Volume<std::uint8_t>& v) { return {v.data().begin(), v.data().end()}; }

bool equal(const Sample& a, const Sample& b) {
  for (int m = 0; m < 4; ++m) {
    if (!(a.images.channels[m] == b.images.channels[m])) return false;
  }
  return a.labels.labels == b.labels.labels;
}

}  // namespace

TEST(Rotate, ZeroAngleIsIdentity) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto l = oracle::random_labels({4, 5, 6}, rng);
    VolumeF v({4, 5, 6});
    for (auto& x : v.data()) x = uniform01(rng);
    for (Plane p : {Plane::Axial, Plane::Coronal, Plane::Sagittal}) {
      ASSERT_EQ(rotate_labels(l.labels, 0.0, p), l.labels);
      ASSERT_EQ(rotate_image(v, 0.0, p), v);
    }
  }
}

TEST(Rotate, QuarterTurnMatchesIndexPermutation) {
  Rng rng(2);
  const int n = 7;
  const auto l = oracle::random_labels({3, n, n}, rng);
  const auto r = rotate_labels(l.labels, 90.0, Plane::Axial);
  for (int z = 0; z < 3; ++z)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) ASSERT_EQ(r(z, a, b), l.labels(z, b, n - 1 - a));

  VolumeF v({3, n, n});
  for (auto& x : v.data()) x = uniform01(rng);
  const auto rv = rotate_image(v, 90.0, Plane::Axial);
  for (int z = 0; z < 3; ++z)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) ASSERT_NEAR(rv(z, a, b), v(z, b, n - 1 - a), 1e-12);
}

TEST(Rotate, QuarterTurnInOtherPlanes) {
  Rng rng(3);
  const int n = 5;
  const auto l = oracle::random_labels({n, 4, n}, rng);
  const auto r = rotate_labels(l.labels, 90.0, Plane::Coronal);
  for (int a = 0; a < n; ++a)
    for (int y = 0; y < 4; ++y)
      for (int b = 0; b < n; ++b) ASSERT_EQ(r(a, y, b), l.labels(b, y, n - 1 - a));
  const auto m = oracle::random_labels({n, n, 3}, rng);
  const auto s = rotate_labels(m.labels, 90.0, Plane::Sagittal);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int x = 0; x < 3; ++x) ASSERT_EQ(s(a, b, x), m.labels(b, n - 1 - a, x));
}

TEST(Rotate, LabelAlphabetPreserved) {
  Rng rng(4);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto l = oracle::random_labels({6, 6, 6}, rng);
    const auto r = rotate_labels(l.labels, angle(rng), static_cast<Plane>(trial % 3));
    for (int v : alphabet(r)) ASSERT_TRUE(v == 0 || alphabet(l.labels).contains(v));
  }
}

TEST(Flip, Involution) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto l = oracle::random_labels({3, 4, 5}, rng);
    const auto orig = l.labels;
    const int axis = trial % 3;
    flip_axis(l.labels, axis);
    if (trial < 3) EXPECT_NE(l.labels, orig);
    flip_axis(l.labels, axis);
    ASSERT_EQ(l.labels, orig);
  }
  Volume<std::uint8_t> v({1, 1, 3});
  v.data() = {1, 2, 4};
  flip_axis(v, 2);
  EXPECT_EQ(v.data(), (std::vector<std::uint8_t>{4, 2, 1}));
  EXPECT_THROW(flip_axis(v, 3), Error);
}

TEST(Blur, PreservesConstantAndSmooths) {
  const VolumeF c({6, 6, 6}, 3.0);
  const auto b = gaussian_blur(c, 1.0);
  for (double x : b.data()) ASSERT_NEAR(x, 3.0, 1e-12);
  VolumeF spike({9, 9, 9});
  spike(4, 4, 4) = 1.0;
  const auto s = gaussian_blur(spike, 1.0);
  EXPECT_LT(s(4, 4, 4), 1.0);
  EXPECT_GT(s(4, 4, 5), 0.0);
  double total = 0.0;
  for (double x : s.data()) total += x;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_THROW(gaussian_blur(c, 0.0), Error);
}

TEST(Augment, DisabledIsIdentity) {
  Rng rng(6);
  const Sample s = phantom_sample(1);
  for (int trial = 0; trial < 100; ++trial) {
    ASSERT_TRUE(equal(augment(s, AugmentConfig::disabled(), rng), s));
  }
}

TEST(Augment, BlurOnlyChangesImagesNotLabels) {
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.p_blur = 1.0;
  Rng rng(7);
  const Sample s = phantom_sample(2);
  const Sample out = augment(s, cfg, rng);
  EXPECT_EQ(out.labels.labels, s.labels.labels);
  EXPECT_NE(out.images.channels[0], s.images.channels[0]);
}

TEST(Augment, LabelAlphabetAndHierarchyPreserved) {
  AugmentConfig cfg;
  cfg.p_flip_axis = {0.5, 0.5, 0.5};
  cfg.p_rotate = 1.0;
  cfg.rotate_max_deg = 45.0;
  Rng rng(8);
  const Sample s = phantom_sample(3);
  const auto in = alphabet(s.labels.labels);
  for (int trial = 0; trial < 100; ++trial) {
    const Sample out = augment(s, cfg, rng);
    for (int v : alphabet(out.labels.labels)) ASSERT_TRUE(in.contains(v));
    ASSERT_TRUE(validate_hierarchy(out.labels).valid);
  }
}

TEST(Augment, ReproducibleFromRngState) {
  const Sample s = phantom_sample(4);
  AugmentConfig cfg;
  cfg.p_rotate = 1.0;
  cfg.p_blur = 1.0;
  Rng a(9), b(9);
  EXPECT_TRUE(equal(augment(s, cfg, a), augment(s, cfg, b)));
}

TEST(Augment, ValidatesConfig) {
  AugmentConfig cfg;
  cfg.p_rotate = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = AugmentConfig{};
  cfg.blur_sigma_range = {1.0, 0.5};
  EXPECT_THROW(cfg.validate(), Error);
}
