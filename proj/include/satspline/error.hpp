#pragma once

#include <stdexcept>
#include <string>

namespace satspline {

// Raised for malformed inputs: bad shapes, out-of-domain values, bad files.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a numerical routine cannot make progress (e.g. step underflow).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace satspline
