#pragma once

#include <cstdint>
#include <vector>

#include "cseg/config.hpp"
#include "cseg/tensor.hpp"

namespace cseg {

/// Adam with bias correction over a fixed list of parameters.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, const AdamConfig& config);

  void step(double lr);
  [[nodiscard]] std::int64_t steps() const { return t_; }

  // Moment buffers, one per parameter, exposed for checkpointing.
  [[nodiscard]] std::vector<std::vector<double>>& first_moments() { return m_; }
  [[nodiscard]] std::vector<std::vector<double>>& second_moments() { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace cseg
