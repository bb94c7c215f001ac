#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cseg/rng.hpp"
#include "cseg/tensor.hpp"

namespace cseg::nn {

// Each layer caches what its backward pass needs during forward(); backward() must follow
// the matching forward() and accumulates into the parameter gradients.

/// Stride-1 convolution with zero "same" padding; kernel 1 or 3.
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(int in_channels, int out_channels, int kernel, Rng& rng, const std::string& name);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(std::vector<Parameter*>& out) { out.push_back(&weight_); out.push_back(&bias_); }

  [[nodiscard]] int in_channels() const { return cin_; }
  [[nodiscard]] int out_channels() const { return cout_; }
  [[nodiscard]] int kernel() const { return k_; }

 private:
  int cin_ = 0, cout_ = 0, k_ = 1;
  Parameter weight_, bias_;
  Tensor input_;
};

/// Per-sample, per-channel normalization with learnable scale and shift.
class InstanceNorm {
 public:
  static constexpr double kEps = 1e-5;

  InstanceNorm() = default;
  InstanceNorm(int channels, const std::string& name);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(std::vector<Parameter*>& out) { out.push_back(&gamma_); out.push_back(&beta_); }

 private:
  int channels_ = 0;
  Parameter gamma_, beta_;
  Tensor normalized_;
  std::vector<double> inv_std_;
};

class LeakyRelu {
 public:
  static constexpr double kSlope = 0.01;
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

 private:
  std::vector<std::uint8_t> positive_;
};

/// 2x2x2 max pooling; input extents must be even.
class MaxPool2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

 private:
  Shape3 in_shape_{};
  std::vector<std::uint32_t> argmax_;
};

/// Trilinear upsampling by an integer factor (half-pixel centres, edge clamped).
class Upsample {
 public:
  explicit Upsample(int factor = 2) : factor_(factor) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  [[nodiscard]] int factor() const { return factor_; }

 private:
  int factor_;
  Shape3 in_shape_{};
};

class Sigmoid {
 public:
  Tensor forward(const Tensor& x);
  /// Gradient w.r.t. the logits given the gradient w.r.t. the probabilities.
  Tensor backward(const Tensor& grad_out) const;

 private:
  Tensor output_;
};

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace cseg::nn
