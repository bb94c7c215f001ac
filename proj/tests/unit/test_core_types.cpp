#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cseg/dataset.hpp"
#include "cseg/labels.hpp"
#include "cseg/nifti.hpp"
#include "oracles.hpp"

using namespace cseg;

namespace {

LabelMap single(std::uint8_t label) {
  LabelMap l{Volume<std::uint8_t>({3, 3, 3}), {}};
  l.labels(1, 1, 1) = label;
  return l;
}

RegionMask mask_of(Shape3 s, Region r, std::initializer_list<std::array<int, 3>> on) {
  RegionMask m{Volume<std::uint8_t>(s), r};
  for (const auto& p : on) m.mask(p[0], p[1], p[2]) = 1;
  return m;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cseg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(RegionMask, EdemaIsWholeTumorOnly) {
  const auto l = single(2);
  EXPECT_EQ(region_mask_from_labels(l, Region::WT).mask(1, 1, 1), 1);
  EXPECT_EQ(region_mask_from_labels(l, Region::TC).mask(1, 1, 1), 0);
  EXPECT_EQ(region_mask_from_labels(l, Region::ET).mask(1, 1, 1), 0);
}

TEST(RegionMask, CountsByLabel) {
  LabelMap l{Volume<std::uint8_t>({4, 4, 4}), {}};
  auto& d = l.labels.data();
  for (int i = 0; i < 5; ++i) d[i] = 1;
  for (int i = 5; i < 8; ++i) d[i] = 2;
  for (int i = 8; i < 10; ++i) d[i] = 4;
  EXPECT_EQ(region_mask_from_labels(l, Region::WT).count(), 10u);
  EXPECT_EQ(region_mask_from_labels(l, Region::TC).count(), 7u);
  EXPECT_EQ(region_mask_from_labels(l, Region::ET).count(), 2u);
}

TEST(RegionMask, RejectsUnknownRegion) {
  EXPECT_THROW(region_mask_from_labels(single(1), static_cast<Region>(7)), Error);
  EXPECT_THROW(region_from_name("XX"), Error);
  EXPECT_EQ(region_from_name("TC"), Region::TC);
}

TEST(ComposeLabels, InnermostWins) {
  const Shape3 s{3, 3, 3};
  const auto wt = mask_of(s, Region::WT, {{0, 0, 0}, {1, 1, 1}});
  const auto l = compose_labels(wt, mask_of(s, Region::TC, {{0, 0, 0}, {1, 1, 1}}),
                                mask_of(s, Region::ET, {{0, 0, 0}, {1, 1, 1}}));
  EXPECT_EQ(l.labels(0, 0, 0), 4);
  EXPECT_EQ(l.labels(1, 1, 1), 4);
  EXPECT_EQ(l.labels(2, 2, 2), 0);
}

TEST(ComposeLabels, WholeTumorOnlyIsEdema) {
  const Shape3 s{3, 3, 3};
  const auto l = compose_labels(mask_of(s, Region::WT, {{0, 1, 2}}), mask_of(s, Region::TC, {}),
                                mask_of(s, Region::ET, {}));
  EXPECT_EQ(l.labels(0, 1, 2), 2);
  EXPECT_EQ(std::count(l.labels.data().begin(), l.labels.data().end(), 0), 26);
}

TEST(ComposeLabels, ClipsOutsideParent) {
  const Shape3 s{3, 3, 3};
  // TC voxel (2,2,2) lies outside WT; ET voxel (0,0,1) is inside WT but outside TC.
  const auto l = compose_labels(mask_of(s, Region::WT, {{0, 0, 0}, {0, 0, 1}}),
                                mask_of(s, Region::TC, {{0, 0, 0}, {2, 2, 2}}),
                                mask_of(s, Region::ET, {{0, 0, 1}, {2, 2, 2}}));
  EXPECT_EQ(l.labels(0, 0, 0), 1);
  EXPECT_EQ(l.labels(0, 0, 1), 2);
  EXPECT_EQ(l.labels(2, 2, 2), 0);
}

TEST(ComposeLabels, ShapeMismatchThrows) {
  EXPECT_THROW(compose_labels(mask_of({3, 3, 3}, Region::WT, {}), mask_of({3, 3, 2}, Region::TC, {}),
                              mask_of({3, 3, 3}, Region::ET, {})),
               Error);
}

TEST(Hierarchy, AllZeroIsValid) {
  LabelMap l{Volume<std::uint8_t>({2, 3, 4}), {}};
  const auto r = validate_hierarchy(l);
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.counts.at(0), 24u);
}

TEST(Hierarchy, LabelThreeIsInvalid) {
  EXPECT_FALSE(validate_hierarchy(single(3)).valid);
}

TEST(Hierarchy, DecomposeComposeRoundTrip) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const LabelMap l = oracle::random_labels({5, 4, 6}, rng);
    const LabelMap back =
        compose_labels(region_mask_from_labels(l, Region::WT), region_mask_from_labels(l, Region::TC),
                       region_mask_from_labels(l, Region::ET));
    ASSERT_EQ(back.labels, l.labels);
    ASSERT_TRUE(validate_hierarchy(back).valid);
  }
}

TEST(Volume, CropCopiesBox) {
  VolumeF v({4, 5, 6});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto c = crop(v, {1, 2, 3}, {2, 2, 2});
  EXPECT_EQ(c(0, 0, 0), v(1, 2, 3));
  EXPECT_EQ(c(1, 1, 1), v(2, 3, 4));
  EXPECT_THROW(crop(v, {3, 0, 0}, {2, 2, 2}), Error);
}

TEST(ModalityStack, ValidateRejectsMixedShapes) {
  ModalityStack s;
  for (auto& c : s.channels) c = VolumeF({2, 2, 2});
  EXPECT_NO_THROW(s.validate());
  s.channels[3] = VolumeF({2, 2, 3});
  EXPECT_THROW(s.validate(), Error);
}

TEST(Nifti, RoundTripFloatAndLabels) {
  const auto dir = temp_dir("nifti");
  VolumeF v({3, 4, 5});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.25 * static_cast<double>(i) - 3.0;
  const Spacing sp{2.0, 1.5, 0.5};
  for (const char* name : {"a.nii", "a.nii.gz"}) {
    write_nifti(dir / name, v, sp, NiftiType::Float64);
    const auto img = read_nifti(dir / name);
    EXPECT_EQ(img.data, v);
    EXPECT_EQ(img.spacing, sp);
  }
  write_nifti(dir / "f.nii.gz", v, sp, NiftiType::Float32);
  EXPECT_EQ(read_nifti(dir / "f.nii.gz").data, v);  // quarter steps are exact in float32

  Volume<std::uint8_t> l({3, 4, 5});
  l(1, 2, 3) = 4;
  l(0, 0, 0) = 2;
  write_nifti_labels(dir / "seg.nii.gz", l, sp);
  Spacing got;
  EXPECT_EQ(read_nifti_labels(dir / "seg.nii.gz", &got), l);
  EXPECT_EQ(got, sp);
}

TEST(Nifti, GzipOutputIsDeterministic) {
  const auto dir = temp_dir("nifti_det");
  VolumeF v({4, 4, 4}, 1.5);
  write_nifti(dir / "a.nii.gz", v, {}, NiftiType::Float32);
  write_nifti(dir / "b.nii.gz", v, {}, NiftiType::Float32);
  std::ifstream a(dir / "a.nii.gz", std::ios::binary), b(dir / "b.nii.gz", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(Nifti, RejectsGarbage) {
  const auto dir = temp_dir("nifti_bad");
  {
    std::ofstream os(dir / "x.nii", std::ios::binary);
    os << "not an image at all";
  }
  EXPECT_THROW(read_nifti(dir / "x.nii"), Error);
  EXPECT_THROW(read_nifti(dir / "missing.nii.gz"), Error);
}

TEST(Dataset, SaveLoadCase) {
  const auto dir = temp_dir("dataset");
  ModalityStack s;
  s.case_id = "c1";
  s.spacing = {1.0, 1.0, 2.0};
  for (int m = 0; m < 4; ++m) s.channels[m] = VolumeF({2, 3, 4}, 1.0 + m);
  LabelMap l{Volume<std::uint8_t>({2, 3, 4}), s.spacing};
  l.labels(1, 1, 1) = 1;
  save_case(dir, s, &l);
  EXPECT_EQ(list_cases(dir), std::vector<std::string>{"c1"});
  const Case c = load_case(dir, "c1", true);
  EXPECT_EQ(c.images.case_id, "c1");
  EXPECT_EQ(c.images.spacing, s.spacing);
  for (int m = 0; m < 4; ++m) EXPECT_EQ(c.images.channels[m], s.channels[m]);
  ASSERT_TRUE(c.truth.has_value());
  EXPECT_EQ(c.truth->labels, l.labels);
  EXPECT_THROW(load_case(dir, "nope", false), Error);
}
