#include "cseg/unet.hpp"

#include <algorithm>

namespace cseg {
namespace {

VolumeF to_volume(Tensor t) {
  const Shape3 s = t.shape();
  return VolumeF(s, std::move(t.values()));
}

Tensor grad_tensor(const VolumeF& g, Shape3 shape) {
  if (g.empty()) return Tensor(1, shape);
  require_same_shape(g.shape(), shape, "unet gradient");
  return Tensor::from_volume(g);
}

}  // namespace

std::string_view norm_name(NormKind n) { return n == NormKind::Instance ? "instance" : "none"; }

NormKind norm_from_name(std::string_view s) {
  if (s == "instance") return NormKind::Instance;
  if (s == "none") return NormKind::None;
  throw Error("unknown norm '" + std::string(s) + "' (expected instance or none)");
}

void UNetConfig::validate() const {
  if (in_channels < 1) throw Error("unet: in_channels must be >= 1");
  if (levels < 2 || levels > 8) throw Error("unet: levels must be in [2,8]");
  if (base_channels < 1) throw Error("unet: base_channels must be >= 1");
  if (aux_outputs != 3) throw Error("unet: aux_outputs is fixed at 3");
}

int UNetConfig::aux_level(int k) const { return std::max(1, levels - 1 - k); }

UNet::ConvUnit UNet::make_unit(int cin, int cout, Rng& rng, const std::string& name) const {
  ConvUnit u;
  u.conv = nn::Conv3d(cin, cout, 3, rng, name + ".conv");
  u.use_norm = config_.norm == NormKind::Instance;
  if (u.use_norm) u.norm = nn::InstanceNorm(cout, name + ".norm");
  return u;
}

UNet::DoubleConv UNet::make_double(int cin, int cout, Rng& rng, const std::string& name) const {
  DoubleConv d;
  d.first = make_unit(cin, cout, rng, name + ".0");
  d.second = make_unit(cout, cout, rng, name + ".1");
  return d;
}

Tensor UNet::ConvUnit::forward(const Tensor& x) {
  Tensor y = conv.forward(x);
  if (use_norm) y = norm.forward(y);
  return act.forward(y);
}

Tensor UNet::ConvUnit::backward(const Tensor& g) {
  Tensor d = act.backward(g);
  if (use_norm) d = norm.backward(d);
  return conv.backward(d);
}

void UNet::ConvUnit::collect(std::vector<Parameter*>& out) {
  conv.collect(out);
  if (use_norm) norm.collect(out);
}

UNet::UNet(const UNetConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int L = config_.levels;
  for (int l = 0; l < L; ++l) {
    const int cin = l == 0 ? config_.in_channels : config_.channels_at(l - 1);
    encoder_.push_back(make_double(cin, config_.channels_at(l), rng, "enc" + std::to_string(l)));
  }
  pools_.resize(L - 1);
  for (int l = 0; l < L - 1; ++l) {
    UpUnit u;
    u.unit = make_unit(config_.channels_at(l + 1), config_.channels_at(l), rng, "up" + std::to_string(l));
    ups_.push_back(std::move(u));
    decoder_.push_back(make_double(2 * config_.channels_at(l), config_.channels_at(l), rng,
                                   "dec" + std::to_string(l)));
  }
  main_head_.proj = nn::Conv3d(config_.channels_at(0), 1, 1, rng, "head.main");
  for (int k = 0; k < 3; ++k) {
    Head& h = aux_heads_[k];
    h.level = config_.aux_level(k);
    h.proj = nn::Conv3d(config_.channels_at(h.level), 1, 1, rng, "head.aux" + std::to_string(k));
    h.up = nn::Upsample(1 << h.level);
  }
}

void UNet::check_input(const Tensor& input) const {
  if (input.channels() != config_.in_channels) {
    throw Error("unet: expected " + std::to_string(config_.in_channels) + " input channels, got " +
                std::to_string(input.channels()));
  }
  static constexpr const char* kAxis[3] = {"depth", "height", "width"};
  const int div = config_.divisor();
  for (int a = 0; a < 3; ++a) {
    if (input.shape()[a] % div != 0 || input.shape()[a] == 0) {
      throw Error(std::string("unet: input ") + kAxis[a] + " " + std::to_string(input.shape()[a]) +
                  " is not divisible by " + std::to_string(div));
    }
  }
}

StepOutput UNet::forward(const Tensor& input) {
  check_input(input);
  input_shape_ = input.shape();
  const int L = config_.levels;

  std::vector<Tensor> skips(L);
  skips[0] = encoder_[0].forward(input);
  for (int l = 1; l < L; ++l) skips[l] = encoder_[l].forward(pools_[l - 1].forward(skips[l - 1]));

  std::vector<Tensor> decoded(L);
  decoded[L - 1] = skips[L - 1];
  for (int l = L - 2; l >= 0; --l) {
    Tensor up = ups_[l].unit.forward(ups_[l].up.forward(decoded[l + 1]));
    decoded[l] = decoder_[l].forward(concat_channels(skips[l], up));
  }

  StepOutput out;
  out.main = to_volume(main_head_.act.forward(main_head_.proj.forward(decoded[0])));
  for (int k = 0; k < 3; ++k) {
    Head& h = aux_heads_[k];
    out.aux[k] = to_volume(h.act.forward(h.up.forward(h.proj.forward(decoded[h.level]))));
  }
  return out;
}

Tensor UNet::backward(const StepGrad& grad) {
  const int L = config_.levels;
  std::vector<Tensor> g_dec(L), g_skip(L);
  for (int l = 0; l < L; ++l) {
    g_dec[l] = Tensor(config_.channels_at(l), Shape3{input_shape_.d >> l, input_shape_.h >> l, input_shape_.w >> l});
    g_skip[l] = g_dec[l];
  }

  g_dec[0] += main_head_.proj.backward(main_head_.act.backward(grad_tensor(grad.main, input_shape_)));
  for (int k = 0; k < 3; ++k) {
    if (grad.aux[k].empty()) continue;
    Head& h = aux_heads_[k];
    g_dec[h.level] += h.proj.backward(h.up.backward(h.act.backward(grad_tensor(grad.aux[k], input_shape_))));
  }

  for (int l = 0; l < L - 1; ++l) {
    Tensor g_cat = decoder_[l].backward(g_dec[l]);
    Tensor g_s, g_up;
    split_channels(g_cat, config_.channels_at(l), g_s, g_up);
    g_skip[l] += g_s;
    g_dec[l + 1] += ups_[l].up.backward(ups_[l].unit.backward(g_up));
  }
  g_skip[L - 1] += g_dec[L - 1];

  for (int l = L - 1; l >= 1; --l) {
    g_skip[l - 1] += pools_[l - 1].backward(encoder_[l].backward(g_skip[l]));
  }
  return encoder_[0].backward(g_skip[0]);
}

std::vector<Parameter*> UNet::parameters() {
  std::vector<Parameter*> out;
  for (auto& e : encoder_) e.collect(out);
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    ups_[l].unit.collect(out);
    decoder_[l].collect(out);
  }
  main_head_.proj.collect(out);
  for (auto& h : aux_heads_) h.proj.collect(out);
  return out;
}

std::size_t UNet::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->value.size();
  return n;
}

void UNet::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace cseg
