#include "cseg/inference.hpp"

#include <algorithm>

#include "cseg/patching.hpp"

namespace cseg {

RegionMask binarize(const VolumeF& prob, double tau, Region region) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error("binarize: threshold must be in (0,1)");
  RegionMask m{Volume<std::uint8_t>(prob.shape()), region};
  const auto& p = prob.data();
  auto& out = m.mask.data();
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > tau ? 1 : 0;
  return m;
}

Shape3 effective_patch_size(Shape3 volume, Shape3 patch, int divisor) {
  Shape3 out = patch;
  for (int a = 0; a < 3; ++a) {
    if (out[a] % divisor != 0) {
      throw Error("infer: patch size " + patch.str() + " not divisible by " + std::to_string(divisor));
    }
    if (out[a] > volume[a]) out[a] = volume[a] / divisor * divisor;
    if (out[a] < 1) {
      throw Error("infer: volume " + volume.str() + " smaller than the network divisor " + std::to_string(divisor));
    }
  }
  return out;
}

Prediction predict_case(CascadeModel& model, const ModalityStack& images, const InferConfig& cfg) {
  cfg.validate();
  images.validate();
  const Shape3 shape = images.shape();
  const Shape3 size = effective_patch_size(shape, cfg.patch_size, model.config().step_config(0).divisor());
  Shape3 stride = cfg.stride;
  for (int a = 0; a < 3; ++a) stride[a] = std::min(stride[a], size[a]);

  std::array<PatchAssembler, 3> acc = {PatchAssembler(shape), PatchAssembler(shape), PatchAssembler(shape)};
  const VolumeF& flair = images[Modality::Flair];
  const VolumeF& t1ce = images[Modality::T1ce];
  for (const Corner& c : grid_patches(shape, size, stride)) {
    const CascadeOutput out = model.forward(crop(flair, c, size), crop(t1ce, c, size), cfg.gate);
    for (int k = 0; k < 3; ++k) acc[k].add(out.steps[k].main, c);
  }

  Prediction pred;
  for (int k = 0; k < 3; ++k) pred.probs[k] = acc[k].finish();
  const RegionMask wt = binarize(pred.probs[0], cfg.thresholds[0], Region::WT);
  const RegionMask tc = binarize(pred.probs[1], cfg.thresholds[1], Region::TC);
  const RegionMask et = binarize(pred.probs[2], cfg.thresholds[2], Region::ET);
  pred.labels = compose_labels(wt, tc, et, images.spacing);
  return pred;
}

}  // namespace cseg
