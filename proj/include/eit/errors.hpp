#pragma once

#include <stdexcept>
#include <string>

namespace eit {

/* Invalid or inconsistent user configuration (CLI exit status 3). */
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/* Failure inside a numerical routine: singular factorization, residual
   blow-up, degenerate geometry produced at runtime (CLI exit status 4). */
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace eit
