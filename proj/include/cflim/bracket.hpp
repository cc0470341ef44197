#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <string>
#include <utility>

namespace cflim {

// Mantissa width used for certified real arithmetic.
inline constexpr mpfr_prec_t kBracketPrec = 128;

/// Certified enclosure [lo, hi] of a real quantity.
///
/// Every operation rounds the lower endpoint toward -inf and the upper
/// endpoint toward +inf, so enclosures are preserved through arbitrary
/// compositions.  Endpoints may be +/-inf; [x, +inf] is a valid enclosure
/// of a quantity that is only bounded below.
class Bracket {
 public:
  Bracket();                       // [0, 0]
  explicit Bracket(double v);      // point interval
  Bracket(double lo, double hi);
  Bracket(const Bracket& o);
  Bracket(Bracket&& o) noexcept;
  Bracket& operator=(const Bracket& o);
  Bracket& operator=(Bracket&& o) noexcept;
  ~Bracket();

  static Bracket from_int(long v);
  static Bracket from_mpz(const mpz_class& v);
  static Bracket from_mpq(const mpq_class& v);
  static Bracket pos_inf();        // [+inf, +inf]
  static Bracket zero_to_inf();    // [0, +inf]

  double lo() const;               // rounded down to double
  double hi() const;               // rounded up to double
  bool contains(double v) const;
  bool contains(const Bracket& o) const;   // o subset of *this
  bool is_point() const;
  bool finite() const;
  double width() const;            // hi - lo, rounded up
  double mid() const;
  std::string str(int digits = 10) const;

  // Certified order tests (false means "cannot certify").
  bool definitely_lt(double v) const { return hi() < v; }
  bool definitely_le(double v) const { return hi() <= v; }
  bool definitely_gt(double v) const { return lo() > v; }
  bool definitely_ge(double v) const { return lo() >= v; }

  friend Bracket operator+(const Bracket& a, const Bracket& b);
  friend Bracket operator-(const Bracket& a, const Bracket& b);
  friend Bracket operator*(const Bracket& a, const Bracket& b);
  friend Bracket operator/(const Bracket& a, const Bracket& b);
  Bracket& operator+=(const Bracket& b);

  friend Bracket neg(const Bracket& a);
  friend Bracket recip(const Bracket& a);            // a must not contain 0
  friend Bracket hull(const Bracket& a, const Bracket& b);
  /// [max(lo_of.lo, 0), hi_of.hi] without any double round-trip.
  static Bracket span_nonneg(const Bracket& lo_of, const Bracket& hi_of);
  // Intersection; valid enclosures of one quantity always intersect.
  friend Bracket intersect(const Bracket& a, const Bracket& b);

  friend Bracket exp(const Bracket& a);
  friend Bracket log(const Bracket& a);              // a.lo > 0
  friend Bracket pow(const Bracket& base, const Bracket& expo);  // base >= 0
  friend Bracket pow_si(const Bracket& base, long e);
  friend Bracket root_ui(const Bracket& a, unsigned long k);     // a >= 0
  friend Bracket sqrt(const Bracket& a);

  // log(v) for a big integer v >= 1.
  static Bracket log_mpz(const mpz_class& v);
  // log(1 + v) for a big integer v >= 0.
  static Bracket log1p_mpz(const mpz_class& v);
  // v^(-e) for big integer v >= 1 and e > 0.
  static Bracket neg_pow_mpz(const mpz_class& v, const Bracket& e);

  mpfr_srcptr lo_raw() const { return lo_; }
  mpfr_srcptr hi_raw() const { return hi_; }
  mpfr_ptr lo_raw() { return lo_; }
  mpfr_ptr hi_raw() { return hi_; }

 private:
  mpfr_t lo_, hi_;
};

}  // namespace cflim
