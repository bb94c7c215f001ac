#include "cseg/layers.hpp"

#include <algorithm>
#include <cmath>

namespace cseg::nn {
namespace {

inline void axpy(int n, double a, const double* __restrict x, double* __restrict y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

// Four independent partial sums so the reduction vectorizes without reassociation flags.
inline double dot(int n, const double* __restrict x, const double* __restrict y) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += x[i] * y[i];
    acc[1] += x[i + 1] * y[i + 1];
    acc[2] += x[i + 2] * y[i + 2];
    acc[3] += x[i + 3] * y[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
}

struct Span1 {
  int lo, hi;  // output range [lo, hi) for which input index o + delta is valid
};

inline Span1 valid_range(int n, int delta) { return {std::max(0, -delta), std::min(n, n - delta)}; }

/// Index map for linear resampling along one axis with half-pixel centres.
struct LinearMap {
  std::vector<int> i0, i1;
  std::vector<double> t;

  LinearMap(int n_in, int factor) {
    const int n_out = n_in * factor;
    i0.resize(n_out);
    i1.resize(n_out);
    t.resize(n_out);
    for (int j = 0; j < n_out; ++j) {
      double src = (j + 0.5) / factor - 0.5;
      if (src < 0.0) src = 0.0;
      const int lo = std::min(static_cast<int>(std::floor(src)), n_in - 1);
      i0[j] = lo;
      i1[j] = std::min(lo + 1, n_in - 1);
      t[j] = src - lo;
    }
  }
};

/// Splits a C x D x H x W tensor around `axis` into outer x n x inner.
void axis_layout(const Tensor& x, int axis, std::size_t& outer, std::size_t& inner) {
  const Shape3 s = x.shape();
  outer = static_cast<std::size_t>(x.channels());
  inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(s[a]);
  for (int a = axis + 1; a < 3; ++a) inner *= static_cast<std::size_t>(s[a]);
}

Shape3 with_axis(Shape3 s, int axis, int n) {
  if (axis == 0) s.d = n;
  else if (axis == 1) s.h = n;
  else s.w = n;
  return s;
}

Tensor resample_axis(const Tensor& x, int axis, int factor) {
  const int n_in = x.shape()[axis];
  const LinearMap map(n_in, factor);
  const int n_out = n_in * factor;
  std::size_t outer, inner;
  axis_layout(x, axis, outer, inner);
  Tensor y(x.channels(), with_axis(x.shape(), axis, n_out));
  const double* src = x.data();
  double* dst = y.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (int j = 0; j < n_out; ++j) {
      const double* a = src + (o * n_in + map.i0[j]) * inner;
      const double* b = src + (o * n_in + map.i1[j]) * inner;
      double* d = dst + (o * n_out + j) * inner;
      const double t = map.t[j];
      for (std::size_t i = 0; i < inner; ++i) d[i] = (1.0 - t) * a[i] + t * b[i];
    }
  }
  return y;
}

Tensor resample_axis_backward(const Tensor& g, int axis, int factor, int n_in) {
  const LinearMap map(n_in, factor);
  const int n_out = n_in * factor;
  Tensor gx(g.channels(), with_axis(g.shape(), axis, n_in));
  std::size_t outer, inner;
  axis_layout(gx, axis, outer, inner);
  const double* src = g.data();
  double* dst = gx.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (int j = 0; j < n_out; ++j) {
      const double* gj = src + (o * n_out + j) * inner;
      double* a = dst + (o * n_in + map.i0[j]) * inner;
      double* b = dst + (o * n_in + map.i1[j]) * inner;
      const double t = map.t[j];
      for (std::size_t i = 0; i < inner; ++i) {
        a[i] += (1.0 - t) * gj[i];
        b[i] += t * gj[i];
      }
    }
  }
  return gx;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

Conv3d::Conv3d(int in_channels, int out_channels, int kernel, Rng& rng, const std::string& name)
    : cin_(in_channels), cout_(out_channels), k_(kernel) {
  if (kernel != 1 && kernel != 3) throw Error("conv3d: kernel must be 1 or 3");
  if (in_channels <= 0 || out_channels <= 0) throw Error("conv3d: channel counts must be positive");
  const std::size_t taps = static_cast<std::size_t>(kernel) * kernel * kernel;
  weight_ = Parameter(name + ".weight", static_cast<std::size_t>(cout_) * cin_ * taps);
  bias_ = Parameter(name + ".bias", static_cast<std::size_t>(cout_));
  // He initialization for the LeakyReLU stack.
  std::normal_distribution<double> init(0.0, std::sqrt(2.0 / (static_cast<double>(cin_) * taps)));
  for (double& w : weight_.value) w = init(rng);
}

Tensor Conv3d::forward(const Tensor& x) {
  if (x.channels() != cin_) {
    throw Error("conv3d " + weight_.name + ": expected " + std::to_string(cin_) +
                " input channels, got " + std::to_string(x.channels()));
  }
  input_ = x;
  const Shape3 s = x.shape();
  Tensor y(cout_, s);
  const int r = k_ / 2;
  const std::size_t taps = static_cast<std::size_t>(k_) * k_ * k_;
  for (int co = 0; co < cout_; ++co) {
    double* out = y.channel(co).data();
    std::fill(out, out + y.voxels(), bias_.value[co]);
    for (int ci = 0; ci < cin_; ++ci) {
      const double* in = x.channel(ci).data();
      const double* w = &weight_.value[(static_cast<std::size_t>(co) * cin_ + ci) * taps];
      if (k_ == 1) {
        axpy(static_cast<int>(x.voxels()), w[0], in, out);
        continue;
      }
      for (int kz = 0; kz < 3; ++kz) {
        const Span1 rz = valid_range(s.d, kz - r);
        for (int ky = 0; ky < 3; ++ky) {
          const Span1 ry = valid_range(s.h, ky - r);
          for (int kx = 0; kx < 3; ++kx) {
            const Span1 rx = valid_range(s.w, kx - r);
            const double wk = w[(kz * 3 + ky) * 3 + kx];
            const int n = rx.hi - rx.lo;
            for (int z = rz.lo; z < rz.hi; ++z) {
              for (int yy = ry.lo; yy < ry.hi; ++yy) {
                double* o = out + (static_cast<std::size_t>(z) * s.h + yy) * s.w + rx.lo;
                const double* i = in + (static_cast<std::size_t>(z + kz - r) * s.h + (yy + ky - r)) * s.w +
                                  (rx.lo + kx - r);
                axpy(n, wk, i, o);
              }
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor Conv3d::backward(const Tensor& grad_out) {
  const Shape3 s = input_.shape();
  require_same_shape(grad_out.shape(), s, "conv3d backward");
  Tensor gx(cin_, s);
  const int r = k_ / 2;
  const std::size_t taps = static_cast<std::size_t>(k_) * k_ * k_;
  for (int co = 0; co < cout_; ++co) {
    const double* g = grad_out.channel(co).data();
    double gb = 0.0;
    for (std::size_t i = 0; i < grad_out.voxels(); ++i) gb += g[i];
    bias_.grad[co] += gb;
    for (int ci = 0; ci < cin_; ++ci) {
      const double* in = input_.channel(ci).data();
      double* gi = gx.channel(ci).data();
      const std::size_t woff = (static_cast<std::size_t>(co) * cin_ + ci) * taps;
      const double* w = &weight_.value[woff];
      double* gw = &weight_.grad[woff];
      if (k_ == 1) {
        const int n = static_cast<int>(input_.voxels());
        gw[0] += dot(n, g, in);
        axpy(n, w[0], g, gi);
        continue;
      }
      for (int kz = 0; kz < 3; ++kz) {
        const Span1 rz = valid_range(s.d, kz - r);
        for (int ky = 0; ky < 3; ++ky) {
          const Span1 ry = valid_range(s.h, ky - r);
          for (int kx = 0; kx < 3; ++kx) {
            const Span1 rx = valid_range(s.w, kx - r);
            const int tap = (kz * 3 + ky) * 3 + kx;
            const double wk = w[tap];
            const int n = rx.hi - rx.lo;
            double acc = 0.0;
            for (int z = rz.lo; z < rz.hi; ++z) {
              for (int yy = ry.lo; yy < ry.hi; ++yy) {
                const double* o = g + (static_cast<std::size_t>(z) * s.h + yy) * s.w + rx.lo;
                const std::size_t src = (static_cast<std::size_t>(z + kz - r) * s.h + (yy + ky - r)) * s.w +
                                        (rx.lo + kx - r);
                acc += dot(n, o, in + src);
                axpy(n, wk, o, gi + src);
              }
            }
            gw[tap] += acc;
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------------------------

InstanceNorm::InstanceNorm(int channels, const std::string& name)
    : channels_(channels),
      gamma_(name + ".gamma", static_cast<std::size_t>(channels)),
      beta_(name + ".beta", static_cast<std::size_t>(channels)) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
}

Tensor InstanceNorm::forward(const Tensor& x) {
  if (x.channels() != channels_) throw Error("instance norm: channel mismatch");
  const std::size_t n = x.voxels();
  normalized_ = Tensor(channels_, x.shape());
  inv_std_.assign(channels_, 0.0);
  Tensor y(channels_, x.shape());
  for (int c = 0; c < channels_; ++c) {
    auto in = x.channel(c);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[c] = inv;
    auto xh = normalized_.channel(c);
    auto out = y.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      xh[i] = (in[i] - mean) * inv;
      out[i] = gamma_.value[c] * xh[i] + beta_.value[c];
    }
  }
  return y;
}

Tensor InstanceNorm::backward(const Tensor& grad_out) {
  const std::size_t n = grad_out.voxels();
  Tensor gx(channels_, grad_out.shape());
  for (int c = 0; c < channels_; ++c) {
    auto g = grad_out.channel(c);
    auto xh = normalized_.channel(c);
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_g += g[i];
      sum_gx += g[i] * xh[i];
    }
    gamma_.grad[c] += sum_gx;
    beta_.grad[c] += sum_g;
    const double scale = gamma_.value[c] * inv_std_[c] / static_cast<double>(n);
    auto out = gx.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = scale * (static_cast<double>(n) * g[i] - sum_g - xh[i] * sum_gx);
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------------------------

Tensor LeakyRelu::forward(const Tensor& x) {
  Tensor y = x;
  positive_.resize(x.size());
  auto& v = y.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    positive_[i] = v[i] > 0.0;
    if (!positive_[i]) v[i] *= kSlope;
  }
  return y;
}

Tensor LeakyRelu::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  auto& v = g.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!positive_[i]) v[i] *= kSlope;
  }
  return g;
}

// ---------------------------------------------------------------------------------------------

Tensor MaxPool2::forward(const Tensor& x) {
  const Shape3 s = x.shape();
  for (int a = 0; a < 3; ++a) {
    if (s[a] % 2 != 0) {
      throw Error("maxpool: extent " + std::to_string(s[a]) + " along axis " + std::to_string(a) +
                  " is not even");
    }
  }
  in_shape_ = s;
  const Shape3 o{s.d / 2, s.h / 2, s.w / 2};
  Tensor y(x.channels(), o);
  argmax_.assign(y.size(), 0);
  std::size_t k = 0;
  for (int c = 0; c < x.channels(); ++c) {
    const double* in = x.channel(c).data();
    for (int z = 0; z < o.d; ++z) {
      for (int yy = 0; yy < o.h; ++yy) {
        for (int xx = 0; xx < o.w; ++xx, ++k) {
          std::size_t best = (static_cast<std::size_t>(2 * z) * s.h + 2 * yy) * s.w + 2 * xx;
          for (int dz = 0; dz < 2; ++dz) {
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                const std::size_t idx =
                    (static_cast<std::size_t>(2 * z + dz) * s.h + 2 * yy + dy) * s.w + 2 * xx + dx;
                if (in[idx] > in[best]) best = idx;
              }
            }
          }
          argmax_[k] = static_cast<std::uint32_t>(best);
          y.values()[k] = in[best];
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& grad_out) {
  Tensor gx(grad_out.channels(), in_shape_);
  const std::size_t per = grad_out.voxels();
  for (int c = 0; c < grad_out.channels(); ++c) {
    double* dst = gx.channel(c).data();
    for (std::size_t i = 0; i < per; ++i) {
      const std::size_t k = static_cast<std::size_t>(c) * per + i;
      dst[argmax_[k]] += grad_out.values()[k];
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------------------------

Tensor Upsample::forward(const Tensor& x) {
  in_shape_ = x.shape();
  if (factor_ == 1) return x;
  Tensor y = resample_axis(x, 0, factor_);
  y = resample_axis(y, 1, factor_);
  return resample_axis(y, 2, factor_);
}

Tensor Upsample::backward(const Tensor& grad_out) {
  if (factor_ == 1) return grad_out;
  Tensor g = resample_axis_backward(grad_out, 2, factor_, in_shape_.w);
  g = resample_axis_backward(g, 1, factor_, in_shape_.h);
  return resample_axis_backward(g, 0, factor_, in_shape_.d);
}

// ---------------------------------------------------------------------------------------------

Tensor Sigmoid::forward(const Tensor& x) {
  output_ = x;
  for (double& v : output_.values()) v = sigmoid(v);
  return output_;
}

Tensor Sigmoid::backward(const Tensor& grad_out) const {
  Tensor g = grad_out;
  auto& v = g.values();
  const auto& p = output_.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= p[i] * (1.0 - p[i]);
  return g;
}

}  // namespace cseg::nn
