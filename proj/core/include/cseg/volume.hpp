#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cseg/error.hpp"

namespace cseg {

/// Spatial extent of a 3D grid, slowest axis first (depth, height, width).
struct Shape3 {
  int d = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t voxels() const {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  [[nodiscard]] int operator[](int axis) const { return axis == 0 ? d : axis == 1 ? h : w; }
  [[nodiscard]] int& operator[](int axis) { return axis == 0 ? d : axis == 1 ? h : w; }
  [[nodiscard]] std::array<int, 3> as_array() const { return {d, h, w}; }
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Voxel size in millimetres, same axis order as Shape3.
struct Spacing {
  double d = 1.0;
  double h = 1.0;
  double w = 1.0;

  [[nodiscard]] double operator[](int axis) const { return axis == 0 ? d : axis == 1 ? h : w; }
  [[nodiscard]] bool valid() const { return d > 0.0 && h > 0.0 && w > 0.0; }

  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Dense 3D array with the last axis contiguous.
template <class T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;
  explicit Volume(Shape3 shape, T fill = T{}) : shape_(shape), data_(shape.voxels(), fill) {}
  Volume(Shape3 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.voxels()) {
      throw Error("volume data size " + std::to_string(data_.size()) +
                  " does not match shape " + shape_.str());
    }
  }

  [[nodiscard]] const Shape3& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * shape_.h + y) * shape_.w + x;
  }
  T& operator()(int z, int y, int x) { return data_[index(z, y, x)]; }
  const T& operator()(int z, int y, int x) const { return data_[index(z, y, x)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::span<T> span() { return data_; }
  [[nodiscard]] std::span<const T> span() const { return data_; }
  [[nodiscard]] std::vector<T>& data() { return data_; }
  [[nodiscard]] const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

using VolumeF = Volume<double>;

inline std::string Shape3::str() const {
  return std::to_string(d) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

inline void require_same_shape(const Shape3& a, const Shape3& b, const char* what) {
  if (!(a == b)) throw Error(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

/// Copies the box [corner, corner + size) out of a volume.
template <class T>
Volume<T> crop(const Volume<T>& v, std::array<int, 3> corner, Shape3 size) {
  const Shape3& s = v.shape();
  for (int a = 0; a < 3; ++a) {
    if (corner[a] < 0 || corner[a] + size[a] > s[a]) {
      throw Error("crop box exceeds volume along axis " + std::to_string(a));
    }
  }
  Volume<T> out(size);
  for (int z = 0; z < size.d; ++z) {
    for (int y = 0; y < size.h; ++y) {
      const T* src = &v(z + corner[0], y + corner[1], corner[2]);
      T* dst = &out(z, y, 0);
      std::copy(src, src + size.w, dst);
    }
  }
  return out;
}

}  // namespace cseg
