#include "cseg/cascade.hpp"

namespace cseg {

std::string_view gate_name(GateMode g) { return g == GateMode::Soft ? "soft" : "hard"; }

GateMode gate_from_name(std::string_view s) {
  if (s == "soft") return GateMode::Soft;
  if (s == "hard") return GateMode::Hard;
  throw Error("unknown gate mode '" + std::string(s) + "' (expected soft or hard)");
}

void CascadeConfig::validate() const {
  step_config(0).validate();
  if (!(gate_threshold > 0.0 && gate_threshold < 1.0)) throw Error("cascade: gate_threshold must be in (0,1)");
}

UNetConfig CascadeConfig::step_config(int step) const {
  UNetConfig c;
  c.in_channels = step == 0 ? 2 : 1;
  c.levels = levels;
  c.base_channels = base_channels;
  c.norm = norm;
  return c;
}

VolumeF apply_mask(const VolumeF& volume, const VolumeF& gate) {
  require_same_shape(volume.shape(), gate.shape(), "apply_mask");
  VolumeF out(volume.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = volume[i] * gate[i];
  return out;
}

std::pair<VolumeF, VolumeF> apply_mask_backward(const VolumeF& volume, const VolumeF& gate,
                                                const VolumeF& grad_out) {
  require_same_shape(volume.shape(), gate.shape(), "apply_mask backward");
  require_same_shape(volume.shape(), grad_out.shape(), "apply_mask backward");
  VolumeF gv(volume.shape()), gg(volume.shape());
  for (std::size_t i = 0; i < gv.size(); ++i) {
    gv[i] = grad_out[i] * gate[i];
    gg[i] = grad_out[i] * volume[i];
  }
  return {std::move(gv), std::move(gg)};
}

VolumeF harden(const VolumeF& p, double threshold) {
  VolumeF out(p.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i] > threshold ? 1.0 : 0.0;
  return out;
}

namespace {

void mask_outputs(StepOutput& out, const VolumeF& gate) {
  for (auto* v : {&out.main, &out.aux[0], &out.aux[1], &out.aux[2]}) {
    for (std::size_t i = 0; i < v->size(); ++i) (*v)[i] *= gate[i];
  }
}

void mask_grads(StepGrad& g, const VolumeF& gate) {
  for (auto* v : {&g.main, &g.aux[0], &g.aux[1], &g.aux[2]}) {
    for (std::size_t i = 0; i < v->size(); ++i) (*v)[i] *= gate[i];
  }
}

}  // namespace

CascadeModel::CascadeModel(const CascadeConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  for (int k = 0; k < 3; ++k) {
    steps_[k] = UNet(config_.step_config(k), seed * 3 + static_cast<std::uint64_t>(k) + 1);
  }
}

CascadeOutput CascadeModel::forward(const VolumeF& flair, const VolumeF& t1ce, GateMode gate) {
  require_same_shape(flair.shape(), t1ce.shape(), "cascade input");
  t1ce_ = t1ce;
  last_gate_ = gate;
  auto gate_of = [&](const VolumeF& p) {
    return gate == GateMode::Soft ? p : harden(p, config_.gate_threshold);
  };

  CascadeOutput out;
  const std::array<const VolumeF*, 2> first = {&flair, &t1ce};
  out.steps[0] = steps_[0].forward(Tensor::stack(first));
  for (int k = 1; k < 3; ++k) {
    const VolumeF g = gate_of(out.steps[k - 1].main);
    out.steps[k] = steps_[k].forward(Tensor::from_volume(apply_mask(t1ce, g)));
    if (gate == GateMode::Hard) {
      // Outputs are confined to the previous step's foreground as well as the inputs.
      mask_outputs(out.steps[k], g);
      hard_gates_[k] = g;
    }
  }
  return out;
}

void CascadeModel::backward(const std::array<StepGrad, 3>& grads) {
  const Shape3 s = t1ce_.shape();
  auto main_grad = [&](const VolumeF& g) { return g.empty() ? VolumeF(s) : g; };

  StepGrad g2 = grads[2];
  if (last_gate_ == GateMode::Hard) mask_grads(g2, hard_gates_[2]);
  Tensor gin = steps_[2].backward(g2);

  StepGrad g1 = grads[1];
  g1.main = main_grad(g1.main);
  if (last_gate_ == GateMode::Hard) mask_grads(g1, hard_gates_[1]);
  if (last_gate_ == GateMode::Soft) {
    // d(t1ce * p_tc)/d p_tc = t1ce
    const auto& gi = gin.values();
    for (std::size_t i = 0; i < g1.main.size(); ++i) g1.main[i] += gi[i] * t1ce_[i];
  }
  gin = steps_[1].backward(g1);

  StepGrad g0 = grads[0];
  g0.main = main_grad(g0.main);
  if (last_gate_ == GateMode::Soft) {
    const auto& gi = gin.values();
    for (std::size_t i = 0; i < g0.main.size(); ++i) g0.main[i] += gi[i] * t1ce_[i];
  }
  steps_[0].backward(g0);
}

std::vector<Parameter*> CascadeModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& s : steps_) {
    auto p = s.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void CascadeModel::zero_grad() {
  for (auto& s : steps_) s.zero_grad();
}

}  // namespace cseg
