#pragma once

#include <stdexcept>
#include <string>

namespace cseg {

/// Raised for any contract violation or I/O failure inside the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cseg
