#include <gtest/gtest.h>

#include <cmath>

#include "cseg/patching.hpp"
#include "cseg/phantom.hpp"

using namespace cseg;

namespace {

ModalityStack ramp_stack(Shape3 s) {
  ModalityStack m;
  for (int c = 0; c < 4; ++c) {
    m.channels[c] = VolumeF(s);
    for (std::size_t i = 0; i < m.channels[c].size(); ++i) m.channels[c][i] = static_cast<double>(i) + 0.5 * c;
  }
  return m;
}

}  // namespace

TEST(SamplePatch, FullSizeReturnsWholeVolume) {
  const Shape3 s{8, 6, 4};
  const auto imgs = ramp_stack(s);
  LabelMap l{Volume<std::uint8_t>(s), {}};
  l.labels(1, 2, 3) = 4;
  Rng rng(1);
  const Sample p = sample_patch(imgs, l, s, rng);
  EXPECT_EQ(p.images.channels[2], imgs.channels[2]);
  EXPECT_EQ(p.labels.labels, l.labels);
}

TEST(SamplePatch, CornersStayInBounds) {
  const Shape3 s{128, 128, 128};
  ModalityStack imgs;
  for (auto& c : imgs.channels) c = VolumeF(s);
  // Encode each voxel's index in the flair channel so the corner can be recovered.
  for (int z = 0; z < s.d; ++z)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) imgs.channels[0](z, y, x) = z * 1e6 + y * 1e3 + x;
  LabelMap l{Volume<std::uint8_t>(s), {}};
  Rng rng(2);
  const Shape3 size{96, 96, 96};
  std::array<std::vector<int>, 3> hist;
  for (auto& h : hist) h.assign(33, 0);
  const int draws = 2000;
  for (int i = 0; i < draws; ++i) {
    const Sample p = sample_patch(imgs, l, size, rng);
    const double v = p.images.channels[0](0, 0, 0);
    const int z = static_cast<int>(v / 1e6), y = static_cast<int>(std::fmod(v, 1e6) / 1e3),
              x = static_cast<int>(std::fmod(v, 1e3));
    for (int c : {z, y, x}) ASSERT_TRUE(c >= 0 && c <= 32) << c;
    ++hist[0][z];
    ++hist[1][y];
    ++hist[2][x];
  }
  // Pearson chi-square against uniform over 33 bins; 32 dof, p = 0.001 critical value 62.49.
  for (const auto& h : hist) {
    const double expected = static_cast<double>(draws) / 33.0;
    double chi2 = 0.0;
    for (int c : h) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 62.49);
  }
}

TEST(SamplePatch, ForegroundBiasContainsTumor) {
  auto pp = PhantomParams::defaults_for({64, 64, 64});
  pp.seed = 3;
  const auto c = generate_case(pp);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Sample p = sample_patch(c.images, c.labels, {16, 16, 16}, rng, 1.0);
    ASSERT_GT(region_mask_from_labels(p.labels, Region::WT).count(), 0u);
  }
}

TEST(SamplePatch, TooLargeThrows) {
  const Shape3 s{8, 8, 8};
  LabelMap l{Volume<std::uint8_t>(s), {}};
  Rng rng(4);
  EXPECT_THROW(sample_patch(ramp_stack(s), l, {8, 9, 8}, rng), Error);
}

TEST(GridPatches, SingleCornerWhenSizeMatches) {
  const auto c = grid_patches({96, 96, 96}, {96, 96, 96}, {48, 48, 48});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Corner{0, 0, 0}));
}

TEST(GridPatches, LastCornerClamped) {
  const auto c = grid_patches({128, 128, 128}, {96, 96, 96}, {48, 48, 48});
  ASSERT_EQ(c.size(), 8u);
  for (const auto& k : c) {
    for (int v : k) EXPECT_TRUE(v == 0 || v == 32);
  }
}

TEST(GridPatches, CoversEveryVoxel) {
  for (const Shape3 s : {Shape3{64, 64, 64}, Shape3{37, 50, 33}, Shape3{32, 32, 32}}) {
    const Shape3 size{32, 32, 32}, stride{16, 16, 16};
    const auto corners = grid_patches(s, size, stride);
    Volume<int> hits(s);
    for (const auto& c : corners)
      for (int z = 0; z < size.d; ++z)
        for (int y = 0; y < size.h; ++y)
          for (int x = 0; x < size.w; ++x) ++hits(c[0] + z, c[1] + y, c[2] + x);
    for (int h : hits.data()) ASSERT_GT(h, 0);
  }
  EXPECT_THROW(grid_patches({64, 64, 64}, {32, 32, 32}, {0, 16, 16}), Error);
  EXPECT_THROW(grid_patches({64, 64, 64}, {32, 32, 32}, {33, 16, 16}), Error);
  EXPECT_THROW(grid_patches({64, 64, 64}, {65, 32, 32}, {16, 16, 16}), Error);
}

TEST(Assemble, ExtractThenAssembleIsIdentity) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> ext(8, 20), psz(2, 8);
    const Shape3 s{ext(rng), ext(rng), ext(rng)};
    const Shape3 size{psz(rng), psz(rng), psz(rng)};
    Shape3 stride = size;
    for (int a = 0; a < 3; ++a) stride[a] = std::uniform_int_distribution<int>(1, size[a])(rng);
    VolumeF v(s);
    for (auto& x : v.data()) x = std::uniform_real_distribution<double>(-5, 5)(rng);
    const auto corners = grid_patches(s, size, stride);
    std::vector<VolumeF> patches;
    for (const auto& c : corners) patches.push_back(crop(v, c, size));
    ASSERT_EQ(assemble(patches, corners, s), v) << "trial " << trial;
  }
}

TEST(Assemble, OverlapIsAveraged) {
  PatchAssembler a({1, 1, 3});
  a.add(VolumeF({1, 1, 2}, 0.0), {0, 0, 0});
  a.add(VolumeF({1, 1, 2}, 1.0), {0, 0, 1});
  const auto out = a.finish();
  EXPECT_EQ(out.data(), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Assemble, SingleFullPatchAndUncovered) {
  VolumeF v({2, 3, 4});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i);
  EXPECT_EQ(assemble({v}, {Corner{0, 0, 0}}, v.shape()), v);
  PatchAssembler a({2, 3, 4});
  a.add(VolumeF({1, 3, 4}), {0, 0, 0});
  EXPECT_THROW((void)a.finish(), Error);
}
