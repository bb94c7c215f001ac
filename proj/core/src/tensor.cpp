#include "cseg/tensor.hpp"

#include <algorithm>

namespace cseg {

Tensor Tensor::stack(std::span<const VolumeF* const> channels) {
  if (channels.empty()) throw Error("tensor: cannot stack zero channels");
  const Shape3 s = channels[0]->shape();
  Tensor t(static_cast<int>(channels.size()), s);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    require_same_shape(channels[c]->shape(), s, "tensor stack");
    std::copy(channels[c]->data().begin(), channels[c]->data().end(), t.channel(static_cast<int>(c)).begin());
  }
  return t;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (o.channels_ != channels_ || !(o.shape_ == shape_)) throw Error("tensor +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "concat");
  Tensor out(a.channels() + b.channels(), a.shape());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<long>(a.size()));
  return out;
}

void split_channels(const Tensor& g, int first_channels, Tensor& ga, Tensor& gb) {
  ga = Tensor(first_channels, g.shape());
  gb = Tensor(g.channels() - first_channels, g.shape());
  std::copy(g.values().begin(), g.values().begin() + static_cast<long>(ga.size()), ga.values().begin());
  std::copy(g.values().begin() + static_cast<long>(ga.size()), g.values().end(), gb.values().begin());
}

}  // namespace cseg
