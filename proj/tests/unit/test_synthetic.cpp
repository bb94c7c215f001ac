#include <gtest/gtest.h>

#include <cmath>

#include "cseg/phantom.hpp"
#include "cseg/polynomial.hpp"

using namespace cseg;

namespace {

double shell_cv(const PhantomCase& c, Modality m) {
  double s = 0, s2 = 0, n = 0;
  const auto& img = c.images[m].data();
  const auto& lab = c.labels.labels.data();
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (lab[i] != 2) continue;
    s += img[i];
    s2 += img[i] * img[i];
    ++n;
  }
  const double mean = s / n;
  return std::sqrt(std::max(0.0, s2 / n - mean * mean)) / mean;
}

PhantomParams small(std::uint64_t seed) {
  auto p = PhantomParams::defaults_for({48, 48, 48});
  p.seed = seed;
  return p;
}

}  // namespace

TEST(Phantom, DeterministicForSeed) {
  const auto a = generate_case(small(3));
  const auto b = generate_case(small(3));
  for (int m = 0; m < 4; ++m) EXPECT_EQ(a.images.channels[m], b.images.channels[m]);
  EXPECT_EQ(a.labels.labels, b.labels.labels);
  const auto c = generate_case(small(4));
  EXPECT_NE(a.labels.labels, c.labels.labels);
}

TEST(Phantom, HierarchyHoldsAndRegionsNest) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = generate_case(small(seed));
    ASSERT_TRUE(validate_hierarchy(c.labels).valid);
    const auto wt = region_mask_from_labels(c.labels, Region::WT);
    const auto tc = region_mask_from_labels(c.labels, Region::TC);
    const auto et = region_mask_from_labels(c.labels, Region::ET);
    EXPECT_GT(et.count(), 0u);
    EXPECT_GT(tc.count(), et.count());
    EXPECT_GT(wt.count(), tc.count());
    for (std::size_t i = 0; i < wt.mask.size(); ++i) {
      ASSERT_LE(et.mask[i], tc.mask[i]);
      ASSERT_LE(tc.mask[i], wt.mask[i]);
    }
  }
}

TEST(Phantom, WholeTumorFractionAtReferenceSize) {
  // Observed over these 50 seeds: 1.7% .. 7.9%.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PhantomParams p;
    p.seed = seed;
    p.noise_sigma = 0.0;
    const auto c = generate_case(p);
    const double frac = static_cast<double>(region_mask_from_labels(c.labels, Region::WT).count()) /
                        static_cast<double>(c.labels.labels.size());
    EXPECT_GE(frac, 0.01) << "seed " << seed;
    EXPECT_LE(frac, 0.20) << "seed " << seed;
  }
}

TEST(Phantom, BackgroundOutsideBrainIsZero) {
  const auto c = generate_case(small(1));
  for (int m = 0; m < 4; ++m) {
    EXPECT_EQ(c.images.channels[m](0, 0, 0), 0.0);
    EXPECT_GT(c.images.channels[m](24, 24, 24), 0.0);
  }
}

TEST(Phantom, RejectsTumorThatCannotFit) {
  auto p = PhantomParams::defaults_for({32, 32, 32});
  p.wt_radius_range = {30.0, 40.0};
  EXPECT_THROW(generate_case(p), Error);
  auto q = PhantomParams::defaults_for({16, 64, 64});
  EXPECT_THROW(generate_case(q), Error);
}

TEST(BiasField, AmplitudeZeroIsIdentity) {
  const auto c = generate_case(small(2));
  const auto spec = BiasFieldSpec::random(2, 0.0, 9);
  EXPECT_EQ(inject_bias_field(c.images[Modality::Flair], spec), c.images[Modality::Flair]);
}

TEST(BiasField, ConstantOneInputGivesField) {
  const Shape3 s{16, 20, 24};
  const auto spec = BiasFieldSpec::random(2, 0.3, 4);
  const auto field = bias_field(s, spec);
  EXPECT_EQ(inject_bias_field(VolumeF(s, 1.0), spec), field);
  double mean = 0.0, lo = 1e9, hi = -1e9;
  for (double v : field.data()) {
    mean += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  mean /= static_cast<double>(field.size());
  EXPECT_NEAR(mean, 1.0, 1e-12);
  EXPECT_GE(lo, 1.0 - 0.3 - 1e-12);
  EXPECT_LE(hi, 1.0 + 0.3 + 1e-12);
}

TEST(BiasField, IncreasesShellVariation) {
  auto p = small(6);
  p.noise_sigma = 0.0;
  const double before = shell_cv(generate_case(p), Modality::Flair);
  p.bias = BiasFieldSpec::random(2, 0.3, 17);
  const double after = shell_cv(generate_case(p), Modality::Flair);
  EXPECT_LT(before, 1e-12);
  EXPECT_GT(after, 0.01);
}

TEST(BiasField, ValidatesSpec) {
  BiasFieldSpec s;
  s.degree = 2;
  s.amplitude = 0.2;
  s.coefficients = {1.0};
  EXPECT_THROW(s.validate(), Error);
  s.coefficients.assign(monomial_exponents(2).size() - 1, 0.1);
  EXPECT_NO_THROW(s.validate());
  s.amplitude = 0.8;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Polynomial, MonomialCounts) {
  // (d+3 choose 3) monomials of total degree <= d in three variables.
  EXPECT_EQ(monomial_exponents(0).size(), 1u);
  EXPECT_EQ(monomial_exponents(1).size(), 4u);
  EXPECT_EQ(monomial_exponents(2).size(), 10u);
  EXPECT_EQ(monomial_exponents(3).size(), 20u);
  EXPECT_EQ(monomial_exponents(2)[0], (std::array<int, 3>{0, 0, 0}));
}
