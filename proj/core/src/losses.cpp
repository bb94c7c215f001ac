#include "cseg/losses.hpp"

#include <algorithm>
#include <cmath>

namespace cseg {

void FocalParams::validate() const {
  if (!(gamma >= 0.0)) throw Error("focal: gamma must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("focal: alpha must be in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error("focal: epsilon must be in (0,0.5)");
}

double focal_loss(std::span<const double> probs, std::span<const std::uint8_t> targets,
                  const FocalParams& params, std::span<double> grad) {
  if (probs.size() != targets.size()) throw Error("focal: probs and targets differ in size");
  if (!grad.empty() && grad.size() != probs.size()) throw Error("focal: gradient buffer size mismatch");
  if (probs.empty()) throw Error("focal: empty input");
  const double n = static_cast<double>(probs.size());
  const double g = params.gamma;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], params.epsilon, 1.0 - params.epsilon);
    const bool pos = targets[i] != 0;
    const double pt = pos ? p : 1.0 - p;
    const double at = pos ? params.alpha : 1.0 - params.alpha;
    const double one_minus = 1.0 - pt;
    const double mod = std::pow(one_minus, g);
    const double logpt = std::log(pt);
    sum += -at * mod * logpt;
    if (!grad.empty()) {
      const bool clamped = probs[i] < params.epsilon || probs[i] > 1.0 - params.epsilon;
      double d_pt = 0.0;
      if (!clamped) {
        const double d_mod = g == 0.0 ? 0.0 : g * std::pow(one_minus, g - 1.0);
        d_pt = at * (d_mod * logpt - mod / pt);
      }
      grad[i] = (pos ? d_pt : -d_pt) / n;
    }
  }
  return sum / n;
}

double deep_supervised_loss(const StepOutput& output, const RegionMask& target,
                            const std::array<double, 3>& aux_weights, const FocalParams& params,
                            StepGrad* grad) {
  params.validate();
  const auto t = target.mask.span();
  auto head = [&](const VolumeF& p, double weight, VolumeF* g) {
    require_same_shape(p.shape(), target.shape(), "deep_supervised_loss");
    if (g) *g = VolumeF(p.shape());
    const double value = focal_loss(p.span(), t, params, g ? g->span() : std::span<double>{});
    if (g && weight != 1.0) {
      for (double& v : g->data()) v *= weight;
    }
    return weight * value;
  };
  double total = head(output.main, 1.0, grad ? &grad->main : nullptr);
  for (int k = 0; k < 3; ++k) {
    if (aux_weights[k] == 0.0) {
      if (grad) grad->aux[k] = VolumeF();
      continue;
    }
    total += head(output.aux[k], aux_weights[k], grad ? &grad->aux[k] : nullptr);
  }
  return total;
}

CascadeLoss cascade_loss(const CascadeOutput& outputs, const std::array<RegionMask, 3>& targets,
                         const std::array<double, 3>& step_weights,
                         const std::array<double, 3>& aux_weights, const FocalParams& params,
                         std::array<StepGrad, 3>* grads) {
  CascadeLoss out;
  for (int k = 0; k < 3; ++k) {
    StepGrad* g = grads ? &(*grads)[k] : nullptr;
    out.step[k] = deep_supervised_loss(outputs.steps[k], targets[k], aux_weights, params, g);
    out.total += step_weights[k] * out.step[k];
    if (g) {
      const double w = step_weights[k];
      for (double& v : g->main.data()) v *= w;
      for (auto& a : g->aux) {
        for (double& v : a.data()) v *= w;
      }
    }
  }
  return out;
}

}  // namespace cseg
