#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace isaclab {

using cdouble = std::complex<double>;
using cvec = std::vector<cdouble>;

// All recoverable failures (bad arguments, schema violations, infeasible
// numerics) surface as isaclab::Error; callers map them to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A well-formed problem with no feasible solution; exit code 2.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

// Malformed configuration input; exit code 3.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(what) {}
};

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Sensing receiver chain: matched filter or reciprocal filter.
enum class Chain { MF, RF };

inline const char* chain_name(Chain c) { return c == Chain::MF ? "mf" : "rf"; }

}  // namespace isaclab
