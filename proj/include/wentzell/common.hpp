#pragma once

// Shared small utilities: error hierarchy, deterministic RNG helper, grids.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wentzell {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadParameter : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Deterministic uniform sampling on top of the standard mt19937_64 engine.
// The bit-to-double mapping is fixed here (rather than relying on
// std::uniform_real_distribution, whose output sequence is implementation
// defined) so that seeded runs produce byte-identical output everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

// |x|^e for x >= 0.  Small integer exponents use repeated multiplication: IEEE
// rounding then commutes exactly with power-of-two scalings of x (e.g.
// (2x)^3 == 8*x^3 bit-for-bit), which libm's pow does not guarantee.
inline double pow_pos(double x, double e) {
  const double n = std::nearbyint(e);
  if (n == e && n >= 1.0 && n <= 8.0) {
    double acc = x;
    for (int i = 1; i < static_cast<int>(n); ++i) acc *= x;
    return acc;
  }
  return std::pow(x, e);
}

// n points logarithmically spaced on [lo, hi], lo, hi > 0.
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw BadParameter("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace wentzell
