#include "cseg/preprocessing.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "cseg/nifti.hpp"
#include "cseg/polynomial.hpp"

namespace cseg {
namespace {

constexpr std::size_t kMinSupport = 1000;

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
  }
  return m;
}

std::string substitute(std::string cmd, const std::string& key, const std::string& value) {
  for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
    cmd.replace(pos, key.size(), value);
  }
  return cmd;
}

}  // namespace

VolumeF estimate_bias_field(const VolumeF& volume, const BiasCorrectionOptions& opts) {
  if (opts.degree < 1 || opts.degree > 4) throw Error("bias: degree must be in [1,4]");
  if (opts.iterations < 1) throw Error("bias: iterations must be >= 1");
  const Shape3 s = volume.shape();

  std::vector<std::size_t> support;
  std::array<int, 3> lo = {s.d, s.h, s.w}, hi = {-1, -1, -1};
  for (int z = 0; z < s.d; ++z) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        if (volume(z, y, x) > 0.0) {
          support.push_back(volume.index(z, y, x));
          const std::array<int, 3> p = {z, y, x};
          for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
          }
        }
      }
    }
  }
  if (support.size() < kMinSupport) {
    throw Error("bias: support has " + std::to_string(support.size()) + " voxels, need >= " +
                std::to_string(kMinSupport));
  }

  const auto exps = monomial_exponents(opts.degree);
  const int n = static_cast<int>(exps.size());
  const AxisNormalizer nz{double(lo[0]), double(hi[0])}, ny{double(lo[1]), double(hi[1])},
      nx{double(lo[2]), double(hi[2])};
  auto basis_at = [&](std::size_t idx, std::vector<double>& out) {
    const int x = static_cast<int>(idx % s.w);
    const int y = static_cast<int>((idx / s.w) % s.h);
    const int z = static_cast<int>(idx / (static_cast<std::size_t>(s.w) * s.h));
    eval_monomials(exps, nz(z), ny(y), nx(x), out);
  };

  std::vector<double> logv(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) logv[i] = std::log(volume[support[i]]);

  std::vector<double> basis;
  std::vector<double> residual(support.size());
  Eigen::VectorXd coef(n);

  std::vector<std::uint8_t> keep(support.size(), 1);
  auto reject_outliers = [&](const std::vector<double>& r) {
    const double med = median_of(r);
    std::vector<double> dev(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) dev[i] = std::fabs(r[i] - med);
    const double sigma = 1.4826 * median_of(dev);
    const double limit = opts.outlier_sigmas * sigma + 1e-6;
    for (std::size_t i = 0; i < r.size(); ++i) keep[i] = dev[i] <= limit;
  };
  // First pass starts on the dominant intensity class rather than the whole support.
  reject_outliers(logv);

  for (int it = 0; it < opts.iterations; ++it) {
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::size_t used = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!keep[i]) continue;
      ++used;
      basis_at(support[i], basis);
      for (int r = 0; r < n; ++r) {
        rhs[r] += basis[r] * logv[i];
        for (int c = 0; c <= r; ++c) normal(r, c) += basis[r] * basis[c];
      }
    }
    if (used < kMinSupport) throw Error("bias: too few inlier voxels for the fit");
    normal.triangularView<Eigen::StrictlyUpper>() = normal.transpose();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
    qr.setThreshold(1e-10);
    if (qr.rank() < n) throw Error("bias: degenerate fit (rank-deficient design)");
    coef = qr.solve(rhs);

    for (std::size_t i = 0; i < support.size(); ++i) {
      basis_at(support[i], basis);
      double fit = 0.0;
      for (int t = 0; t < n; ++t) fit += coef[t] * basis[t];
      residual[i] = logv[i] - fit;
    }
    if (it + 1 == opts.iterations) break;
    reject_outliers(residual);
  }

  // Drop the constant term; the field carries shape only and is scaled to mean 1 below.
  VolumeF field(s);
  for (int z = 0; z < s.d; ++z) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        eval_monomials(exps, nz(z), ny(y), nx(x), basis);
        double fit = 0.0;
        for (int t = 1; t < n; ++t) fit += coef[t] * basis[t];
        field(z, y, x) = std::exp(fit);
      }
    }
  }
  double mean = 0.0;
  for (std::size_t idx : support) mean += field[idx];
  mean /= static_cast<double>(support.size());
  for (double& v : field.data()) v /= mean;
  return field;
}

VolumeF correct_bias(const VolumeF& volume, const BiasCorrectionOptions& opts) {
  const VolumeF field = estimate_bias_field(volume, opts);
  VolumeF out(volume.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = volume[i] > 0.0 ? volume[i] / field[i] : volume[i];
  }
  return out;
}

VolumeF zscore_normalize(const VolumeF& volume) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : volume.data()) {
    if (v != 0.0) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) throw Error("zscore: empty support");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : volume.data()) {
    if (v != 0.0) ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0) || !std::isfinite(sd)) throw Error("zscore: support has zero variance");

  VolumeF out(volume.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = volume[i] != 0.0 ? (volume[i] - mean) / sd : 0.0;
  }
  return out;
}

namespace {

VolumeF external_correction(const VolumeF& volume, Spacing spacing, const std::string& cmd,
                            const std::string& tag) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() /
                       ("cseg-bias-" + std::to_string(rd()) + "-" + std::to_string(rd()));
  fs::create_directories(dir);
  const fs::path in = dir / (tag + "_in.nii.gz");
  const fs::path out = dir / (tag + "_out.nii.gz");
  write_nifti(in, volume, spacing, NiftiType::Float32);
  const std::string line = substitute(substitute(cmd, "{in}", in.string()), "{out}", out.string());
  const int rc = std::system(line.c_str());
  if (rc != 0 || !fs::exists(out)) {
    fs::remove_all(dir);
    throw Error("external bias command failed (exit " + std::to_string(rc) + "): " + line);
  }
  NiftiImage img = read_nifti(out);
  fs::remove_all(dir);
  require_same_shape(img.data.shape(), volume.shape(), "external bias output");
  return std::move(img.data);
}

}  // namespace

ModalityStack preprocess_case(const ModalityStack& images, const PreprocessOptions& opts) {
  images.validate();
  ModalityStack out;
  out.case_id = images.case_id;
  out.spacing = images.spacing;
  for (Modality m : kModalities) {
    VolumeF v = images[m];
    if (opts.external_bias_cmd) {
      v = external_correction(v, images.spacing, *opts.external_bias_cmd,
                              images.case_id + "_" + std::string(modality_name(m)));
    } else if (opts.correct_bias) {
      v = correct_bias(v, opts.bias);
    }
    v = zscore_normalize(v);
    for (double x : v.data()) {
      if (!std::isfinite(x)) {
        throw Error("preprocess: non-finite value in " + images.case_id + " " +
                    std::string(modality_name(m)));
      }
    }
    out[m] = std::move(v);
  }
  return out;
}

}  // namespace cseg
