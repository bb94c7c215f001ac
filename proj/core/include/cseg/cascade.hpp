#pragma once

#include <array>
#include <cstdint>

#include "cseg/unet.hpp"

namespace cseg {

/// How the previous step's probability map gates the next step's input.
enum class GateMode { Soft, Hard };

std::string_view gate_name(GateMode g);
GateMode gate_from_name(std::string_view s);

struct CascadeConfig {
  int levels = 4;
  int base_channels = 16;
  NormKind norm = NormKind::Instance;
  GateMode train_gate = GateMode::Soft;
  GateMode infer_gate = GateMode::Hard;
  double gate_threshold = 0.5;

  void validate() const;
  /// Step 0 sees (flair, t1ce); steps 1 and 2 see masked t1ce.
  [[nodiscard]] UNetConfig step_config(int step) const;

  friend bool operator==(const CascadeConfig&, const CascadeConfig&) = default;
};

/// Per-step outputs; steps[0].main is p_wt, steps[1].main p_tc, steps[2].main p_et.
struct CascadeOutput {
  std::array<StepOutput, 3> steps;

  [[nodiscard]] const VolumeF& p_wt() const { return steps[0].main; }
  [[nodiscard]] const VolumeF& p_tc() const { return steps[1].main; }
  [[nodiscard]] const VolumeF& p_et() const { return steps[2].main; }
};

/// Elementwise volume * gate.
VolumeF apply_mask(const VolumeF& volume, const VolumeF& gate);

/// Gradients of apply_mask w.r.t. (volume, gate) given the upstream gradient.
std::pair<VolumeF, VolumeF> apply_mask_backward(const VolumeF& volume, const VolumeF& gate,
                                                const VolumeF& grad_out);

/// 1 where p > threshold, else 0, as a real-valued gate.
VolumeF harden(const VolumeF& p, double threshold);

/// Three chained step networks.
class CascadeModel {
 public:
  CascadeModel() = default;
  CascadeModel(const CascadeConfig& config, std::uint64_t seed);

  /// Runs the three steps; gates are soft probabilities or hardened at the threshold. Hard
  /// gates also zero the later steps' outputs outside the previous foreground, so
  /// p_et > t implies p_tc > t implies p_wt > t for the gate threshold t.
  CascadeOutput forward(const VolumeF& flair, const VolumeF& t1ce, GateMode gate);

  /// Backpropagates per-step output gradients through all steps, including across soft
  /// gates, accumulating parameter gradients.
  void backward(const std::array<StepGrad, 3>& grads);

  UNet& step(int k) { return steps_[k]; }
  [[nodiscard]] const CascadeConfig& config() const { return config_; }
  [[nodiscard]] std::vector<Parameter*> parameters();
  void zero_grad();

 private:
  CascadeConfig config_;
  std::array<UNet, 3> steps_;
  VolumeF t1ce_;
  std::array<VolumeF, 3> hard_gates_;  // gates applied to steps 1 and 2 under hard gating
  GateMode last_gate_ = GateMode::Soft;
};

}  // namespace cseg
