#include "cseg/adam.hpp"

#include <cmath>

namespace cseg {

Adam::Adam(std::vector<Parameter*> params, const AdamConfig& config)
    : params_(std::move(params)), config_(config) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& value = params_[i]->value;
    const auto& grad = params_[i]->grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
      v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
      value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
    }
  }
}

}  // namespace cseg
