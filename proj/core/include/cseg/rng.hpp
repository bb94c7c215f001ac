#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace cseg {

/// The single random engine used everywhere; each consumer owns its own stream.
using Rng = std::mt19937_64;

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace cseg
