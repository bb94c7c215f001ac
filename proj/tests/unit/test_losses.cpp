#include <gtest/gtest.h>

#include <cmath>

#include "cseg/losses.hpp"
#include "oracles.hpp"

using namespace cseg;

namespace {

struct Grid {
  std::vector<double> p;
  std::vector<std::uint8_t> y;
};

Grid random_grid(std::size_t n, Rng& rng) {
  Grid g;
  for (std::size_t i = 0; i < n; ++i) {
    g.p.push_back(std::uniform_real_distribution<double>(0.01, 0.99)(rng));
    g.y.push_back(uniform01(rng) < 0.3 ? 1 : 0);
  }
  return g;
}

VolumeF random_probs(Shape3 s, Rng& rng) {
  VolumeF v(s);
  for (double& x : v.data()) x = std::uniform_real_distribution<double>(0.02, 0.98)(rng);
  return v;
}

// Independent scalar form of the per-voxel focal term.
double focal_term(double p, int y, double gamma, double alpha) {
  const double pt = y ? p : 1.0 - p;
  const double at = y ? alpha : 1.0 - alpha;
  return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double mean_focal(const VolumeF& p, const RegionMask& t, double gamma, double alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += focal_term(p[i], t.mask[i], gamma, alpha);
  return s / static_cast<double>(p.size());
}

}  // namespace

TEST(Focal, ScalarCase) {
  const double expected = 0.25 * 0.01 * -std::log(0.9);  // 2.6340128e-4
  const std::vector<double> p{0.9};
  const std::vector<std::uint8_t> y{1};
  EXPECT_NEAR(focal_loss(p, y, {}), expected, 1e-9);
  EXPECT_NEAR(expected, 2.634e-4, 5e-8);
}

TEST(Focal, GammaZeroIsWeightedCrossEntropy) {
  Rng rng(1);
  FocalParams fp;
  fp.gamma = 0.0;
  fp.alpha = 0.5;
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = random_grid(64, rng);
    double bce = 0.0;
    for (std::size_t i = 0; i < g.p.size(); ++i) {
      bce += -(g.y[i] ? std::log(g.p[i]) : std::log(1.0 - g.p[i]));
    }
    bce /= static_cast<double>(g.p.size());
    ASSERT_NEAR(focal_loss(g.p, g.y, fp), 0.5 * bce, 1e-6);
  }
}

TEST(Focal, PerfectPredictionIsZero) {
  const std::vector<double> p{1.0, 0.0, 1.0};
  const std::vector<std::uint8_t> y{1, 0, 1};
  EXPECT_NEAR(focal_loss(p, y, {}), 0.0, 1e-20);
}

TEST(Focal, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  FocalParams fp;
  for (int trial = 0; trial < 5; ++trial) {
    Grid g = random_grid(64, rng);  // a 4^3 instance
    std::vector<double> grad(g.p.size());
    focal_loss(g.p, g.y, fp, grad);
    for (std::size_t i = 0; i < g.p.size(); ++i) {
      auto f = [&] { return focal_loss(g.p, g.y, fp); };
      const double n = oracle::central_difference(f, g.p[i], 1e-6);
      ASSERT_NEAR(grad[i], n, 1e-4 * std::abs(n) + 1e-12) << i;
    }
  }
}

TEST(Focal, ClampKeepsLossFinite) {
  const std::vector<double> p{0.0, 1.0};
  const std::vector<std::uint8_t> y{1, 0};
  std::vector<double> grad(2);
  const double l = focal_loss(p, y, {}, grad);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GT(l, 0.0);
}

TEST(Focal, Errors) {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<std::uint8_t> y{1};
  EXPECT_THROW(focal_loss(p, y, {}), Error);
  FocalParams bad;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(DeepSupervised, AuxWeightsZeroIsMainOnly) {
  Rng rng(3);
  const Shape3 s{4, 4, 4};
  StepOutput o{random_probs(s, rng), {random_probs(s, rng), random_probs(s, rng), random_probs(s, rng)}};
  RegionMask t{oracle::random_mask(s, 0.3, rng), Region::WT};
  EXPECT_EQ(deep_supervised_loss(o, t, {0, 0, 0}, {}), focal_loss(o.main.span(), t.mask.span(), {}));
}

TEST(DeepSupervised, FourTermSum) {
  Rng rng(4);
  const Shape3 s{3, 4, 5};
  for (int trial = 0; trial < 10; ++trial) {
    StepOutput o{random_probs(s, rng), {random_probs(s, rng), random_probs(s, rng), random_probs(s, rng)}};
    RegionMask t{oracle::random_mask(s, 0.4, rng), Region::TC};
    const double expected = mean_focal(o.main, t, 2.0, 0.25) + 0.5 * mean_focal(o.aux[0], t, 2.0, 0.25) +
                            0.5 * mean_focal(o.aux[1], t, 2.0, 0.25) + 0.5 * mean_focal(o.aux[2], t, 2.0, 0.25);
    ASSERT_NEAR(deep_supervised_loss(o, t, {0.5, 0.5, 0.5}, {}), expected, 1e-7);
  }
}

TEST(DeepSupervised, PerfectHeadsGiveZero) {
  const Shape3 s{2, 2, 2};
  Rng rng(5);
  RegionMask t{oracle::random_mask(s, 0.5, rng), Region::ET};
  VolumeF p(s);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = t.mask[i];
  StepOutput o{p, {p, p, p}};
  EXPECT_NEAR(deep_supervised_loss(o, t, {0.5, 0.5, 0.5}, {}), 0.0, 1e-15);
}

TEST(CascadeLoss, WeightsSelectSteps) {
  Rng rng(6);
  const Shape3 s{4, 4, 4};
  CascadeOutput out;
  std::array<RegionMask, 3> t;
  for (int k = 0; k < 3; ++k) {
    out.steps[k] = {random_probs(s, rng), {random_probs(s, rng), random_probs(s, rng), random_probs(s, rng)}};
    t[k] = {oracle::random_mask(s, 0.2, rng), kRegions[k]};
  }
  const auto only_first = cascade_loss(out, t, {1, 0, 0}, {0.5, 0.5, 0.5}, {});
  EXPECT_EQ(only_first.total, deep_supervised_loss(out.steps[0], t[0], {0.5, 0.5, 0.5}, {}));
  const auto all = cascade_loss(out, t, {1, 1, 1}, {0.5, 0.5, 0.5}, {});
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) sum += deep_supervised_loss(out.steps[k], t[k], {0.5, 0.5, 0.5}, {});
  EXPECT_NEAR(all.total, sum, 1e-7);
}

TEST(CascadeLoss, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  const Shape3 s{2, 2, 2};
  CascadeOutput out;
  std::array<RegionMask, 3> t;
  for (int k = 0; k < 3; ++k) {
    out.steps[k] = {random_probs(s, rng), {random_probs(s, rng), random_probs(s, rng), random_probs(s, rng)}};
    t[k] = {oracle::random_mask(s, 0.5, rng), kRegions[k]};
  }
  const std::array<double, 3> sw{1.0, 0.7, 0.3}, aw{0.5, 0.25, 0.125};
  std::array<StepGrad, 3> g;
  cascade_loss(out, t, sw, aw, {}, &g);
  auto f = [&] { return cascade_loss(out, t, sw, aw, {}).total; };
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < s.voxels(); ++i) {
      ASSERT_NEAR(g[k].main[i], oracle::central_difference(f, out.steps[k].main[i], 1e-6), 1e-6);
      ASSERT_NEAR(g[k].aux[1][i], oracle::central_difference(f, out.steps[k].aux[1][i], 1e-6), 1e-6);
    }
  }
}
