#include "cseg/polynomial.hpp"

namespace cseg {

std::vector<std::array<int, 3>> monomial_exponents(int degree) {
  std::vector<std::array<int, 3>> out;
  for (int total = 0; total <= degree; ++total) {
    for (int ez = total; ez >= 0; --ez) {
      for (int ey = total - ez; ey >= 0; --ey) out.push_back({ez, ey, total - ez - ey});
    }
  }
  return out;
}

void eval_monomials(const std::vector<std::array<int, 3>>& exps, double uz, double uy, double ux,
                    std::vector<double>& out) {
  out.resize(exps.size());
  std::array<std::array<double, 8>, 3> pw{};
  for (int a = 0; a < 3; ++a) pw[a][0] = 1.0;
  const std::array<double, 3> u = {uz, uy, ux};
  for (int a = 0; a < 3; ++a) {
    for (int k = 1; k < 8; ++k) pw[a][k] = pw[a][k - 1] * u[a];
  }
  for (std::size_t t = 0; t < exps.size(); ++t) {
    out[t] = pw[0][exps[t][0]] * pw[1][exps[t][1]] * pw[2][exps[t][2]];
  }
}

}  // namespace cseg
