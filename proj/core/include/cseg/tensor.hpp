#pragma once

#include <span>
#include <string>
#include <vector>

#include "cseg/volume.hpp"

namespace cseg {

/// C x D x H x W activations of a single sample.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, Shape3 shape, double fill = 0.0)
      : channels_(channels), shape_(shape), data_(static_cast<std::size_t>(channels) * shape.voxels(), fill) {}

  static Tensor from_volume(const VolumeF& v) {
    Tensor t(1, v.shape());
    t.data_ = v.data();
    return t;
  }
  static Tensor stack(std::span<const VolumeF* const> channels);

  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] const Shape3& shape() const { return shape_; }
  [[nodiscard]] std::size_t voxels() const { return shape_.voxels(); }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::span<double> channel(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * voxels(), voxels()};
  }
  [[nodiscard]] std::span<const double> channel(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * voxels(), voxels()};
  }
  [[nodiscard]] VolumeF channel_volume(int c) const {
    auto ch = channel(c);
    return VolumeF(shape_, std::vector<double>(ch.begin(), ch.end()));
  }

  [[nodiscard]] double* data() { return data_.data(); }
  [[nodiscard]] const double* data() const { return data_.data(); }
  [[nodiscard]] std::vector<double>& values() { return data_; }
  [[nodiscard]] const std::vector<double>& values() const { return data_; }

  Tensor& operator+=(const Tensor& o);

 private:
  int channels_ = 0;
  Shape3 shape_{};
  std::vector<double> data_;
};

/// Channel-wise concatenation and its gradient split.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int first_channels, Tensor& ga, Tensor& gb);

/// A learnable array with its accumulated gradient.
struct Parameter {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t size) : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

}  // namespace cseg
