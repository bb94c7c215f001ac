#include <gtest/gtest.h>

#include "cseg/inference.hpp"
#include "cseg/phantom.hpp"
#include "cseg/preprocessing.hpp"

using namespace cseg;

namespace {

CascadeModel micro_model(std::uint64_t seed) {
  CascadeConfig c;
  c.levels = 2;
  c.base_channels = 2;
  return CascadeModel(c, seed);
}

InferConfig small_infer() {
  InferConfig c;
  c.patch_size = {16, 16, 16};
  c.stride = {8, 8, 8};
  return c;
}

}  // namespace

TEST(Binarize, Examples) {
  const Shape3 s{2, 2, 2};
  const auto hi = binarize(VolumeF(s, 0.9), 0.5, Region::WT);
  for (auto x : hi.mask.data()) EXPECT_EQ(x, 1);
  const auto lo = binarize(VolumeF(s, 0.1), 0.5, Region::WT);
  for (auto x : lo.mask.data()) EXPECT_EQ(x, 0);
  VolumeF mixed(s);
  mixed.data() = {0.2, 0.5, 0.51, 0.99, 0.0, 1.0, 0.49, 0.7};
  const auto m = binarize(mixed, 0.5, Region::TC);
  EXPECT_EQ(m.mask.data(), (std::vector<std::uint8_t>{0, 0, 1, 1, 0, 1, 0, 1}));
  EXPECT_EQ(m.region, Region::TC);
  EXPECT_THROW(binarize(mixed, 1.0, Region::WT), Error);
}

TEST(EffectivePatch, ShrinksToVolume) {
  EXPECT_EQ(effective_patch_size({64, 64, 64}, {32, 32, 32}, 2), (Shape3{32, 32, 32}));
  EXPECT_EQ(effective_patch_size({40, 64, 21}, {96, 96, 96}, 8), (Shape3{40, 64, 16}));
  EXPECT_THROW(effective_patch_size({4, 64, 64}, {96, 96, 96}, 8), Error);
  EXPECT_THROW(effective_patch_size({64, 64, 64}, {30, 32, 32}, 8), Error);
}

TEST(PredictCase, ZeroInputIsBackground) {
  CascadeModel m = micro_model(1);
  ModalityStack s;
  for (auto& c : s.channels) c = VolumeF({32, 32, 32});
  const Prediction p = predict_case(m, s, small_infer());
  for (auto v : p.labels.labels.data()) ASSERT_EQ(v, 0);
}

TEST(PredictCase, FusedOutputIsAlwaysValid) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto pp = PhantomParams::defaults_for({32, 40, 36});
    pp.seed = seed;
    const auto c = generate_case(pp);
    const ModalityStack pre = preprocess_case(c.images);
    CascadeModel m = micro_model(seed);
    const Prediction p = predict_case(m, pre, small_infer());
    EXPECT_EQ(p.labels.shape(), pre.shape());
    ASSERT_TRUE(validate_hierarchy(p.labels).valid);
    for (const auto& prob : p.probs) ASSERT_EQ(prob.shape(), pre.shape());
  }
}

TEST(PredictCase, HardGatedMasksNestBeforeFusion) {
  auto pp = PhantomParams::defaults_for({32, 32, 32});
  const ModalityStack pre = preprocess_case(generate_case(pp).images);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CascadeModel m = micro_model(seed);
    InferConfig cfg = small_infer();
    cfg.stride = cfg.patch_size;  // no overlap, so assembly preserves each patch's nesting exactly
    const Prediction p = predict_case(m, pre, cfg);
    const auto wt = binarize(p.probs[0], 0.5, Region::WT);
    const auto tc = binarize(p.probs[1], 0.5, Region::TC);
    const auto et = binarize(p.probs[2], 0.5, Region::ET);
    for (std::size_t i = 0; i < wt.mask.size(); ++i) {
      ASSERT_LE(et.mask[i], tc.mask[i]);
      ASSERT_LE(tc.mask[i], wt.mask[i]);
    }
  }
}

TEST(PredictCase, StrideOnlyMattersWhereOverlapping) {
  auto pp = PhantomParams::defaults_for({32, 32, 32});
  const ModalityStack pre = preprocess_case(generate_case(pp).images);
  CascadeModel m = micro_model(3);
  InferConfig whole = small_infer();
  whole.patch_size = {32, 32, 32};
  whole.stride = {32, 32, 32};
  InferConfig half = whole;
  half.stride = {16, 16, 16};
  // A patch covering the whole volume yields a single grid corner either way.
  EXPECT_EQ(predict_case(m, pre, whole).probs[0], predict_case(m, pre, half).probs[0]);
}

TEST(PredictCase, Errors) {
  CascadeModel m = micro_model(1);
  ModalityStack s;
  for (auto& c : s.channels) c = VolumeF({16, 16, 16});
  s.channels[1] = VolumeF({16, 16, 8});
  EXPECT_THROW(predict_case(m, s, small_infer()), Error);
  InferConfig bad = small_infer();
  bad.stride = {0, 8, 8};
  s.channels[1] = VolumeF({16, 16, 16});
  EXPECT_THROW(predict_case(m, s, bad), Error);
}
