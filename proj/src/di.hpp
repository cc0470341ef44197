#pragma once

// Internal double-interval helpers with outward rounding.  One nextafter
// step after a round-to-nearest op moves the endpoint past the exact value,
// so enclosures are preserved.  Nonnegative quantities only.

#include <cmath>
#include <limits>

namespace cflim::di {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct DI {
  double lo = 0.0, hi = 0.0;
};

inline double down(double x) { return std::nextafter(x, -kInf); }
inline double up(double x) { return std::nextafter(x, kInf); }

inline DI add(DI a, DI b) { return {down(a.lo + b.lo), up(a.hi + b.hi)}; }
inline DI mul(DI a, DI b) {  // nonnegative operands
  return {down(a.lo * b.lo), up(a.hi * b.hi)};
}
inline DI mul3(DI a, DI b, DI c) { return mul(mul(a, b), c); }
inline DI recip_pos(DI a) {  // a.lo > 0
  return {down(1.0 / a.hi), up(1.0 / a.lo)};
}
inline DI from_exact(double v) { return {v, v}; }

// x^e for x-interval >= 0 and point exponent e; libm pow padded by ~18 ulps.
inline double pow_down(double x, double e) {
  double v = std::pow(x, e);
  return down(v * (1.0 - 4e-15));
}
inline double pow_up(double x, double e) {
  double v = std::pow(x, e);
  return up(v * (1.0 + 4e-15));
}
inline DI pow_point(DI x, double e) {
  if (e >= 0) return {pow_down(x.lo, e), pow_up(x.hi, e)};
  return {pow_down(x.hi, e), pow_up(x.lo, e)};
}

// Directed running sums.
struct Acc {
  double lo = 0.0, hi = 0.0;
  void add(DI v) {
    lo = down(lo + v.lo);
    hi = up(hi + v.hi);
  }
  void sub(DI v) {  // remove a previously added contribution (same endpoints)
    lo = down(lo - v.lo);
    hi = up(hi - v.hi);
  }
  DI value() const { return {lo, hi}; }
};

}  // namespace cflim::di
