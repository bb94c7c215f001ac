#include <gtest/gtest.h>

#include <cmath>

#include "cseg/cascade.hpp"
#include "cseg/losses.hpp"
#include "oracles.hpp"

using namespace cseg;

namespace {

CascadeConfig micro() {
  CascadeConfig c;
  c.levels = 2;
  c.base_channels = 2;
  return c;
}

VolumeF random_volume(Shape3 s, Rng& rng) {
  VolumeF v(s);
  for (double& x : v.data()) x = std::normal_distribution<double>(0.0, 1.0)(rng);
  return v;
}

double grad_norm(UNet& net) {
  double s = 0.0;
  for (auto* p : net.parameters())
    for (double g : p->grad) s += g * g;
  return std::sqrt(s);
}

double first_layer_grad_norm(UNet& net) {
  double s = 0.0;
  for (double g : net.parameters().front()->grad) s += g * g;
  return std::sqrt(s);
}

std::array<StepGrad, 3> loss_on(int step, Shape3 s, Rng& rng) {
  std::array<StepGrad, 3> g;
  g[step].main = random_volume(s, rng);
  return g;
}

}  // namespace

TEST(ApplyMask, GateIdentityAndZero) {
  Rng rng(1);
  const VolumeF v = random_volume({3, 3, 3}, rng);
  EXPECT_EQ(apply_mask(v, VolumeF({3, 3, 3}, 1.0)), v);
  EXPECT_EQ(apply_mask(v, VolumeF({3, 3, 3}, 0.0)), VolumeF({3, 3, 3}));
  EXPECT_THROW(apply_mask(v, VolumeF({3, 3, 2})), Error);
}

TEST(ApplyMask, ElementwiseAndBackward) {
  VolumeF v({2, 2, 2}), g({2, 2, 2}), up({2, 2, 2});
  v.data() = {1, 2, 3, 4, 5, 6, 7, 8};
  g.data() = {0.5, 0.25, 0, 1, 2, -1, 0.1, 3};
  up.data() = {1, 1, 1, 1, 2, 2, 2, 2};
  EXPECT_EQ(apply_mask(v, g).data(), (std::vector<double>{0.5, 0.5, 0, 4, 10, -6, 0.7000000000000001, 24}));
  const auto [gv, gg] = apply_mask_backward(v, g, up);
  EXPECT_EQ(gv.data(), (std::vector<double>{0.5, 0.25, 0, 1, 4, -2, 0.2, 6}));
  EXPECT_EQ(gg.data(), (std::vector<double>{1, 2, 3, 4, 10, 12, 14, 16}));
}

TEST(Cascade, StepInputsFollowGate) {
  const CascadeConfig c = micro();
  EXPECT_EQ(c.step_config(0).in_channels, 2);
  EXPECT_EQ(c.step_config(1).in_channels, 1);
  EXPECT_EQ(c.step_config(2).in_channels, 1);
  EXPECT_THROW(gate_from_name("fuzzy"), Error);
}

TEST(Cascade, GradientFlowsAcrossEveryStepPair) {
  const Shape3 s{16, 16, 16};
  Rng rng(2);
  CascadeModel m(micro(), 2);
  const VolumeF flair = random_volume(s, rng), t1ce = random_volume(s, rng);
  for (int loss_step = 1; loss_step < 3; ++loss_step) {
    m.zero_grad();
    m.forward(flair, t1ce, GateMode::Soft);
    m.backward(loss_on(loss_step, s, rng));
    for (int earlier = 0; earlier < loss_step; ++earlier) {
      EXPECT_GT(first_layer_grad_norm(m.step(earlier)), 0.0) << loss_step + 1 << " -> " << earlier + 1;
    }
    for (int later = loss_step + 1; later < 3; ++later) EXPECT_EQ(grad_norm(m.step(later)), 0.0);
  }
}

TEST(Cascade, HardGateBlocksGradient) {
  const Shape3 s{8, 8, 8};
  Rng rng(3);
  CascadeModel m(micro(), 3);
  m.zero_grad();
  m.forward(random_volume(s, rng), random_volume(s, rng), GateMode::Hard);
  m.backward(loss_on(2, s, rng));
  EXPECT_EQ(grad_norm(m.step(0)), 0.0);
  EXPECT_EQ(grad_norm(m.step(1)), 0.0);
}

TEST(Cascade, SoftGateGradientMatchesFiniteDifferences) {
  const Shape3 s{8, 8, 8};
  Rng rng(4);
  CascadeModel m(micro(), 4);
  const VolumeF flair = random_volume(s, rng), t1ce = random_volume(s, rng);
  const auto w = loss_on(2, s, rng);
  auto f = [&] {
    const auto o = m.forward(flair, t1ce, GateMode::Soft);
    double v = 0.0;
    for (std::size_t i = 0; i < o.p_et().size(); ++i) v += o.p_et()[i] * w[2].main[i];
    return v;
  };
  m.zero_grad();
  m.forward(flair, t1ce, GateMode::Soft);
  m.backward(w);
  auto params = m.step(0).parameters();
  for (int i = 0; i < 10; ++i) {
    Parameter* p = params[static_cast<std::size_t>(i) * params.size() / 10];
    const std::size_t j = p->value.size() / 2;
    const double a = p->grad[j];
    // Small step: perturbing step 1 moves many downstream activations across
    // LeakyReLU and max-pool switch points, which a 1e-5 step already straddles.
    const double n = oracle::central_difference(f, p->value[j], 1e-7);
    EXPECT_NEAR(a, n, 1e-4 * std::max(std::abs(a), std::abs(n)) + 1e-7) << p->name;
  }
}

TEST(Cascade, HardGatingNestsForegroundStructurally) {
  const Shape3 s{16, 16, 16};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    CascadeModel m(micro(), seed);
    const auto o = m.forward(random_volume(s, rng), random_volume(s, rng), GateMode::Hard);
    const double t = m.config().gate_threshold;
    for (std::size_t i = 0; i < s.voxels(); ++i) {
      if (o.p_tc()[i] > t) ASSERT_GT(o.p_wt()[i], t);
      if (o.p_et()[i] > t) ASSERT_GT(o.p_tc()[i], t);
    }
  }
}

TEST(Cascade, ZeroAndOneGates) {
  const Shape3 s{8, 8, 8};
  Rng rng(5);
  const VolumeF t1ce = random_volume(s, rng);
  CascadeModel m(micro(), 5);
  UNet& step2 = m.step(1);
  // With p_wt forced to one, step 2 sees exactly t1ce; forced to zero, it sees zeros.
  const auto direct = step2.forward(Tensor::from_volume(apply_mask(t1ce, VolumeF(s, 1.0)))).main;
  EXPECT_EQ(direct, step2.forward(Tensor::from_volume(t1ce)).main);
  const auto zero = step2.forward(Tensor::from_volume(apply_mask(t1ce, VolumeF(s, 0.0)))).main;
  EXPECT_EQ(zero, step2.forward(Tensor::from_volume(VolumeF(s))).main);
}
