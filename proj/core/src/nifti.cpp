#include "cseg/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <memory>

namespace cseg {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

enum DataType : std::int16_t {
  DT_UINT8 = 2,
  DT_INT16 = 4,
  DT_INT32 = 8,
  DT_FLOAT32 = 16,
  DT_FLOAT64 = 64,
  DT_INT8 = 256,
  DT_UINT16 = 512,
  DT_UINT32 = 768,
};

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

bool is_gz(const std::filesystem::path& p) { return p.extension() == ".gz"; }

template <class T>
T get(const std::array<char, kHeaderSize>& h, int off, bool swap) {
  T v;
  std::memcpy(&v, h.data() + off, sizeof(T));
  if (swap) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <class T>
void put(std::array<char, kHeaderSize>& h, int off, T v) {
  std::memcpy(h.data() + off, &v, sizeof(T));
}

void read_exact(gzFile f, void* dst, std::size_t bytes, const std::filesystem::path& p) {
  auto* out = static_cast<char*>(dst);
  while (bytes > 0) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
    const int n = gzread(f, out, chunk);
    if (n <= 0) throw Error("nifti: truncated file " + p.string());
    out += n;
    bytes -= static_cast<std::size_t>(n);
  }
}

int bytes_per_voxel(std::int16_t dt) {
  switch (dt) {
    case DT_UINT8:
    case DT_INT8: return 1;
    case DT_INT16:
    case DT_UINT16: return 2;
    case DT_INT32:
    case DT_UINT32:
    case DT_FLOAT32: return 4;
    case DT_FLOAT64: return 8;
    default: return 0;
  }
}

template <class T>
double load_as_double(const unsigned char* p, bool swap) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if (swap) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return static_cast<double>(v);
}

}  // namespace

NiftiImage read_nifti(const std::filesystem::path& path) {
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw Error("nifti: cannot open " + path.string());

  std::array<char, kHeaderSize> h{};
  read_exact(f.get(), h.data(), h.size(), path);
  bool swap = false;
  if (get<std::int32_t>(h, 0, false) != kHeaderSize) {
    swap = true;
    if (get<std::int32_t>(h, 0, true) != kHeaderSize) {
      throw Error("nifti: bad header size in " + path.string());
    }
  }
  if (std::memcmp(h.data() + 344, "n+1", 3) != 0) {
    throw Error("nifti: only single-file NIfTI-1 is supported (" + path.string() + ")");
  }

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = get<std::int16_t>(h, 40 + 2 * i, swap);
  if (dim[0] < 1 || dim[0] > 7) throw Error("nifti: invalid dim[0] in " + path.string());
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1) throw Error("nifti: multi-frame images are not supported (" + path.string() + ")");
  }
  auto extent = [&](int i) { return i <= dim[0] ? std::max<int>(dim[i], 1) : 1; };
  const Shape3 shape{extent(3), extent(2), extent(1)};

  const auto dt = get<std::int16_t>(h, 70, swap);
  const int bpv = bytes_per_voxel(dt);
  if (bpv == 0) throw Error("nifti: unsupported datatype " + std::to_string(dt));

  std::array<float, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[i] = get<float>(h, 76 + 4 * i, swap);
  auto px = [&](int i) {
    const double v = std::fabs(static_cast<double>(pixdim[i]));
    return v > 0.0 && std::isfinite(v) ? v : 1.0;
  };
  const Spacing spacing{px(3), px(2), px(1)};

  const float vox_offset = get<float>(h, 108, swap);
  const float slope = get<float>(h, 112, swap);
  const float inter = get<float>(h, 116, swap);

  const long skip = static_cast<long>(vox_offset) - kHeaderSize;
  if (skip < 0) throw Error("nifti: invalid vox_offset in " + path.string());
  std::vector<char> pad(static_cast<std::size_t>(skip));
  if (skip > 0) read_exact(f.get(), pad.data(), pad.size(), path);

  std::vector<unsigned char> raw(shape.voxels() * static_cast<std::size_t>(bpv));
  read_exact(f.get(), raw.data(), raw.size(), path);

  VolumeF out(shape);
  const bool scaled = slope != 0.0f && std::isfinite(slope) && !(slope == 1.0f && inter == 0.0f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned char* p = raw.data() + i * bpv;
    double v = 0.0;
    switch (dt) {
      case DT_UINT8: v = load_as_double<std::uint8_t>(p, swap); break;
      case DT_INT8: v = load_as_double<std::int8_t>(p, swap); break;
      case DT_INT16: v = load_as_double<std::int16_t>(p, swap); break;
      case DT_UINT16: v = load_as_double<std::uint16_t>(p, swap); break;
      case DT_INT32: v = load_as_double<std::int32_t>(p, swap); break;
      case DT_UINT32: v = load_as_double<std::uint32_t>(p, swap); break;
      case DT_FLOAT32: v = load_as_double<float>(p, swap); break;
      case DT_FLOAT64: v = load_as_double<double>(p, swap); break;
      default: break;
    }
    out[i] = scaled ? v * slope + inter : v;
  }
  return {std::move(out), spacing};
}

void write_nifti(const std::filesystem::path& path, const VolumeF& data, Spacing spacing,
                 NiftiType type) {
  static_assert(std::endian::native == std::endian::little, "writer assumes little-endian host");
  const Shape3 s = data.shape();
  if (s.d > 32767 || s.h > 32767 || s.w > 32767) throw Error("nifti: volume too large");

  std::int16_t dt = DT_FLOAT32;
  int bpv = 4;
  switch (type) {
    case NiftiType::UInt8: dt = DT_UINT8; bpv = 1; break;
    case NiftiType::Int16: dt = DT_INT16; bpv = 2; break;
    case NiftiType::Float32: dt = DT_FLOAT32; bpv = 4; break;
    case NiftiType::Float64: dt = DT_FLOAT64; bpv = 8; break;
  }

  std::array<char, kHeaderSize> h{};
  put<std::int32_t>(h, 0, kHeaderSize);
  const std::array<std::int16_t, 8> dim = {3, static_cast<std::int16_t>(s.w),
                                           static_cast<std::int16_t>(s.h),
                                           static_cast<std::int16_t>(s.d), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put<std::int16_t>(h, 40 + 2 * i, dim[i]);
  put<std::int16_t>(h, 70, dt);
  put<std::int16_t>(h, 72, static_cast<std::int16_t>(bpv * 8));
  const std::array<float, 8> pixdim = {1.0f, static_cast<float>(spacing.w),
                                       static_cast<float>(spacing.h),
                                       static_cast<float>(spacing.d), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) put<float>(h, 76 + 4 * i, pixdim[i]);
  put<float>(h, 108, static_cast<float>(kVoxOffset));
  put<float>(h, 112, 1.0f);
  put<float>(h, 116, 0.0f);
  h[123] = 2;  // mm
  put<std::int16_t>(h, 254, 1);  // sform: scanner-aligned diagonal
  put<float>(h, 280, pixdim[1]);
  put<float>(h, 296 + 4, pixdim[2]);
  put<float>(h, 312 + 8, pixdim[3]);
  std::memcpy(h.data() + 344, "n+1\0", 4);

  std::vector<unsigned char> buf(kVoxOffset + data.size() * static_cast<std::size_t>(bpv), 0);
  std::memcpy(buf.data(), h.data(), h.size());
  unsigned char* p = buf.data() + kVoxOffset;
  for (std::size_t i = 0; i < data.size(); ++i, p += bpv) {
    const double v = data[i];
    switch (type) {
      case NiftiType::UInt8: {
        const auto q = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        std::memcpy(p, &q, 1);
        break;
      }
      case NiftiType::Int16: {
        const auto q = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
        std::memcpy(p, &q, 2);
        break;
      }
      case NiftiType::Float32: {
        const auto q = static_cast<float>(v);
        std::memcpy(p, &q, 4);
        break;
      }
      case NiftiType::Float64: std::memcpy(p, &v, 8); break;
    }
  }

  if (is_gz(path)) {
    GzHandle f(gzopen(path.c_str(), "wb6"));
    if (!f) throw Error("nifti: cannot write " + path.string());
    std::size_t off = 0;
    while (off < buf.size()) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - off, 1u << 30));
      if (gzwrite(f.get(), buf.data() + off, chunk) != static_cast<int>(chunk)) {
        throw Error("nifti: write failed for " + path.string());
      }
      off += chunk;
    }
  } else {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f || std::fwrite(buf.data(), 1, buf.size(), f.get()) != buf.size()) {
      throw Error("nifti: cannot write " + path.string());
    }
  }
}

Volume<std::uint8_t> read_nifti_labels(const std::filesystem::path& path, Spacing* spacing) {
  NiftiImage img = read_nifti(path);
  Volume<std::uint8_t> out(img.data.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = img.data[i];
    if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
      throw Error("nifti: non-integer label value in " + path.string());
    }
    out[i] = static_cast<std::uint8_t>(v);
  }
  if (spacing) *spacing = img.spacing;
  return out;
}

void write_nifti_labels(const std::filesystem::path& path, const Volume<std::uint8_t>& labels,
                        Spacing spacing) {
  VolumeF tmp(labels.shape());
  for (std::size_t i = 0; i < labels.size(); ++i) tmp[i] = labels[i];
  write_nifti(path, tmp, spacing, NiftiType::UInt8);
}

}  // namespace cseg
