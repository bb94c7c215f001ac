#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "cseg/cascade.hpp"
#include "cseg/labels.hpp"

namespace cseg {

struct FocalParams {
  double gamma = 2.0;     // focusing parameter
  double alpha = 0.25;    // weight of positives; negatives get 1 - alpha
  double epsilon = 1e-7;  // probability clamp before the log

  void validate() const;
};

/// Mean over voxels of -a_t (1 - p_t)^gamma log(p_t). When `grad` is non-empty it receives
/// d(loss)/d(probs) (already divided by the voxel count).
double focal_loss(std::span<const double> probs, std::span<const std::uint8_t> targets,
                  const FocalParams& params, std::span<double> grad = {});

/// focal(main) + sum_k w_k focal(aux_k). Fills `grad` when non-null.
double deep_supervised_loss(const StepOutput& output, const RegionMask& target,
                            const std::array<double, 3>& aux_weights, const FocalParams& params,
                            StepGrad* grad = nullptr);

struct CascadeLoss {
  std::array<double, 3> step{};  // unweighted per-step deep-supervised losses
  double total = 0.0;            // sum_k step_weights_k * step_k
};

/// Weighted sum of the three steps' deep-supervised losses against (WT, TC, ET).
CascadeLoss cascade_loss(const CascadeOutput& outputs, const std::array<RegionMask, 3>& targets,
                         const std::array<double, 3>& step_weights,
                         const std::array<double, 3>& aux_weights, const FocalParams& params,
                         std::array<StepGrad, 3>* grads = nullptr);

}  // namespace cseg
