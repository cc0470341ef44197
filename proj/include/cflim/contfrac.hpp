#pragma once

#include <gmpxx.h>

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "cflim/bracket.hpp"

namespace cflim {

/// A finite continued-fraction digit string together with its running
/// convergent matrix.  Appending digit i maps
///   (q_cur, q_prev) -> (i*q_cur + q_prev, q_cur)
/// and identically for p.  The empty word has (p_prev, p_cur, q_prev, q_cur)
/// = (1, 0, 0, 1), so after consuming n digits p_cur/q_cur is the value of
/// the depth-n truncation.
struct DigitWord {
  std::vector<mpz_class> digits;
  mpz_class p_prev{1}, p_cur{0}, q_prev{0}, q_cur{1};

  void append(const mpz_class& digit);
  void append_ui(unsigned long digit) { append(mpz_class(digit)); }

  static DigitWord from(const std::vector<unsigned long>& ds);
  static DigitWord from_digits(const std::vector<mpz_class>& ds);

  bool empty() const { return digits.empty(); }
  std::size_t size() const { return digits.size(); }

  /// Value p_cur/q_cur of the truncation (0 for the empty word).
  mpq_class value() const;

  /// p_cur*q_prev - p_prev*q_cur; always +1 or -1.
  mpz_class unimodular_det() const;

  /// Endpoints of the cylinder interval, sorted ascending.  The empty word
  /// gives [0, 1].  Its length is 1/(q_cur*(q_cur+q_prev)).
  std::pair<mpq_class, mpq_class> cylinder() const;
  mpq_class cylinder_length() const;

  /// sup |g_w'| over [0,1], attained at 0; equals 1/q_cur^2.  Word must be
  /// nonempty.
  mpq_class sup_derivative() const;

  /// max/min of |g_w'| over [0,1]; equals ((q_prev+q_cur)/q_cur)^2, always
  /// in [1, 4].  Word must be nonempty.
  mpq_class distortion_ratio() const;

  /// Slacks of the two-sided digit bound on log(q_n):
  ///   lower slack = log(q_n) - (1/2) Sum eta_j + log(sqrt 2)
  ///   upper slack = Sum eta_j - log(q_n)
  /// with eta_j = log(1 + digit_j).  Both are nonnegative for every word.
  std::pair<Bracket, Bracket> log_q_slacks() const;
};

/// One step of the Gauss map on an exact rational in [0, 1]:
/// returns (floor(1/x), 1/x - floor(1/x)).  gauss_step(0) = (0, 0), the
/// fixed point.  Throws std::domain_error outside [0, 1].
std::pair<mpz_class, mpq_class> gauss_step(const mpq_class& x);

/// First continued-fraction digit xi = floor(1/x) and eta = log(1 + xi)
/// for x in (0, 1].  Throws std::domain_error at 0 (no first digit).
std::pair<mpz_class, Bracket> xi_eta(const mpq_class& x);

/// A point of [0,1] presented by its continued-fraction digits: either an
/// exact rational (digits computed on demand, finitely many) or a lazy
/// digit stream.  Realized digits are always >= 1.
class CFPoint {
 public:
  explicit CFPoint(const mpq_class& x);
  explicit CFPoint(std::function<mpz_class(std::size_t)> digit_fn);

  bool is_rational() const { return rational_.has_value(); }
  const mpq_class& rational() const;

  /// Number of digits realized so far (for rationals, capped at the full
  /// expansion).
  std::size_t realized() const { return word_.size(); }
  /// Realizes digits up to index i and returns digit i.  For a rational
  /// whose expansion ends before i, throws std::out_of_range.
  const mpz_class& digit(std::size_t i);
  /// True once a rational's expansion is exhausted.
  bool exhausted() const { return exhausted_; }

  const DigitWord& prefix() const { return word_; }

  /// Certified enclosure of the point, from the deepest prefix cylinder
  /// realized within the precision budget (2^-prec target width).
  Bracket value(mpfr_prec_t prec = 256);

 private:
  void realize_next();
  std::optional<mpq_class> rational_;
  mpq_class rest_;  // unconsumed tail of a rational
  std::function<mpz_class(std::size_t)> digit_fn_;
  DigitWord word_;
  bool exhausted_ = false;
};

}  // namespace cflim
