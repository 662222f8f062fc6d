#pragma once

// Shared primitive types, tolerances, and the library error hierarchy.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace comicl {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerances used across the library.  These are part of the observable
// behavior (feasibility checks, integrality decisions, encoder margins) and
// are deliberately centralized so tests and production paths agree.
constexpr double kLpFeasTol = 1e-7;    // simplex primal feasibility
constexpr double kMipFeasTol = 1e-6;   // constraint checks on MIP solutions
constexpr double kIntegralityTol = 1e-6;
constexpr double kClassMarginEps = 1e-6;  // strict-inequality margin in classification encodings
constexpr double kSplitEps = 1e-6;        // strict-inequality margin in tree split linking
constexpr double kUncertaintyFloor = 1e-3;  // lower clamp for predicted uncertainty
constexpr double kRidgeLambda = 1e-6;       // ridge term for linear leaf fits

enum class TaskKind { Regression, Classification };

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

// Base error for all failures raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a conformal quantile is the +inf sentinel and therefore no
// bounded constraint reformulation exists for the requested alpha.
class CalibrationInfeasibleError : public Error {
 public:
  explicit CalibrationInfeasibleError(const std::string& what) : Error(what) {}
};

namespace detail {

// Minimal printf-style formatter for error messages.
template <typename... Args>
std::string format(const char* fmt, Args... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  if (n <= 0) return std::string(fmt);
  std::string out(static_cast<std::size_t>(n), '\0');
  std::snprintf(out.data(), out.size() + 1, fmt, args...);
  return out;
}

inline std::string format(const char* fmt) { return std::string(fmt); }

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const char* fmt, Args... args) {
  throw Error(detail::format(fmt, args...));
}

inline void require(bool cond, const std::string& message) {
  if (!cond) throw Error(message);
}

}  // namespace comicl
