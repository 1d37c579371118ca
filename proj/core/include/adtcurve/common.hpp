#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace adt {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration or malformed input files. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Data fails a validation contract (duplicates, non-finite values, unknown keys).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical procedure could not complete (degenerate inputs, non-convergence).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shortest round-trip decimal representation of a double. Used for all table
/// output so that identical runs produce byte-identical files.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(probe, "%lf", &back);
    if (back == x) return probe;
  }
  return buf;
}

}  // namespace adt
