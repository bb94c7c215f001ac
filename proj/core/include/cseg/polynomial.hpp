#pragma once

#include <array>
#include <vector>

#include "cseg/volume.hpp"

namespace cseg {

/// Exponent triples (ez, ey, ex) of all monomials with total degree <= `degree`,
/// constant term first, then by increasing total degree.
std::vector<std::array<int, 3>> monomial_exponents(int degree);

/// Maps voxel index i in [lo, hi] to [-1, 1]; collapses to 0 when lo == hi.
struct AxisNormalizer {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double operator()(int i) const {
    return hi > lo ? 2.0 * (i - lo) / (hi - lo) - 1.0 : 0.0;
  }
};

/// Evaluates every monomial at one normalized coordinate, writing into `out`.
void eval_monomials(const std::vector<std::array<int, 3>>& exps, double uz, double uy, double ux,
                    std::vector<double>& out);

}  // namespace cseg
