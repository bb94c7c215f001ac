#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cseg/layers.hpp"

namespace cseg {

enum class NormKind { Instance, None };

std::string_view norm_name(NormKind n);
NormKind norm_from_name(std::string_view s);

struct UNetConfig {
  int in_channels = 2;
  int levels = 4;
  int base_channels = 16;
  NormKind norm = NormKind::Instance;
  int aux_outputs = 3;

  void validate() const;
  /// Feature channels at a resolution level (0 = full resolution): base * 2^level.
  [[nodiscard]] int channels_at(int level) const { return base_channels << level; }
  /// Resolution level tapped by auxiliary head k: the coarsest decoder levels, never level 0.
  [[nodiscard]] int aux_level(int k) const;
  /// Spatial extents must be divisible by this.
  [[nodiscard]] int divisor() const { return 1 << (levels - 1); }

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

/// Main probability map plus three auxiliary maps, all at input resolution.
struct StepOutput {
  VolumeF main;
  std::array<VolumeF, 3> aux;
};

/// Loss gradients w.r.t. the four probability maps; an empty volume means zero.
struct StepGrad {
  VolumeF main;
  std::array<VolumeF, 3> aux;
};

/// 3D encoder-decoder with skip connections and deep supervision.
class UNet {
 public:
  UNet() = default;
  UNet(const UNetConfig& config, std::uint64_t seed);

  StepOutput forward(const Tensor& input);
  /// Returns the gradient w.r.t. the last forward() input and accumulates parameter gradients.
  Tensor backward(const StepGrad& grad);

  [[nodiscard]] std::vector<Parameter*> parameters();
  [[nodiscard]] std::size_t parameter_count();
  void zero_grad();
  [[nodiscard]] const UNetConfig& config() const { return config_; }

 private:
  struct ConvUnit {
    nn::Conv3d conv;
    nn::InstanceNorm norm;
    nn::LeakyRelu act;
    bool use_norm = true;

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& g);
    void collect(std::vector<Parameter*>& out);
  };
  struct DoubleConv {
    ConvUnit first, second;
    Tensor forward(const Tensor& x) { return second.forward(first.forward(x)); }
    Tensor backward(const Tensor& g) { return first.backward(second.backward(g)); }
    void collect(std::vector<Parameter*>& out) {
      first.collect(out);
      second.collect(out);
    }
  };
  struct UpUnit {
    nn::Upsample up{2};
    ConvUnit unit;
  };
  struct Head {
    nn::Conv3d proj;
    nn::Upsample up{1};
    nn::Sigmoid act;
    int level = 0;
  };

  ConvUnit make_unit(int cin, int cout, Rng& rng, const std::string& name) const;
  DoubleConv make_double(int cin, int cout, Rng& rng, const std::string& name) const;
  void check_input(const Tensor& input) const;

  UNetConfig config_;
  std::vector<DoubleConv> encoder_;   // levels
  std::vector<nn::MaxPool2> pools_;   // levels - 1
  std::vector<UpUnit> ups_;           // levels - 1, index = destination level
  std::vector<DoubleConv> decoder_;   // levels - 1
  Head main_head_;
  std::array<Head, 3> aux_heads_;
  Shape3 input_shape_{};
};

}  // namespace cseg
