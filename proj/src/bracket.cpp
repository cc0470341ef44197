#include "cflim/bracket.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cflim {

namespace {
void init2(mpfr_t x) { mpfr_init2(x, kBracketPrec); }
}  // namespace

Bracket::Bracket() {
  init2(lo_);
  init2(hi_);
  mpfr_set_zero(lo_, 1);
  mpfr_set_zero(hi_, 1);
}

Bracket::Bracket(double v) : Bracket(v, v) {}

Bracket::Bracket(double lo, double hi) {
  init2(lo_);
  init2(hi_);
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("Bracket: invalid endpoints");
  mpfr_set_d(lo_, lo, MPFR_RNDD);
  mpfr_set_d(hi_, hi, MPFR_RNDU);
}

Bracket::Bracket(const Bracket& o) {
  init2(lo_);
  init2(hi_);
  mpfr_set(lo_, o.lo_, MPFR_RNDD);
  mpfr_set(hi_, o.hi_, MPFR_RNDU);
}

Bracket::Bracket(Bracket&& o) noexcept {
  init2(lo_);
  init2(hi_);
  mpfr_swap(lo_, o.lo_);
  mpfr_swap(hi_, o.hi_);
}

Bracket& Bracket::operator=(const Bracket& o) {
  if (this != &o) {
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }
  return *this;
}

Bracket& Bracket::operator=(Bracket&& o) noexcept {
  if (this != &o) {
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  }
  return *this;
}

Bracket::~Bracket() {
  mpfr_clear(lo_);
  mpfr_clear(hi_);
}

Bracket Bracket::from_int(long v) {
  Bracket b;
  mpfr_set_si(b.lo_, v, MPFR_RNDD);
  mpfr_set_si(b.hi_, v, MPFR_RNDU);
  return b;
}

Bracket Bracket::from_mpz(const mpz_class& v) {
  Bracket b;
  mpfr_set_z(b.lo_, v.get_mpz_t(), MPFR_RNDD);
  mpfr_set_z(b.hi_, v.get_mpz_t(), MPFR_RNDU);
  return b;
}

Bracket Bracket::from_mpq(const mpq_class& v) {
  Bracket b;
  mpfr_set_q(b.lo_, v.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(b.hi_, v.get_mpq_t(), MPFR_RNDU);
  return b;
}

Bracket Bracket::pos_inf() {
  Bracket b;
  mpfr_set_inf(b.lo_, 1);
  mpfr_set_inf(b.hi_, 1);
  return b;
}

Bracket Bracket::zero_to_inf() {
  Bracket b;
  mpfr_set_zero(b.lo_, 1);
  mpfr_set_inf(b.hi_, 1);
  return b;
}

double Bracket::lo() const { return mpfr_get_d(lo_, MPFR_RNDD); }
double Bracket::hi() const { return mpfr_get_d(hi_, MPFR_RNDU); }

bool Bracket::contains(double v) const {
  return mpfr_cmp_d(lo_, v) <= 0 && mpfr_cmp_d(hi_, v) >= 0;
}

bool Bracket::contains(const Bracket& o) const {
  return mpfr_cmp(lo_, o.lo_) <= 0 && mpfr_cmp(hi_, o.hi_) >= 0;
}

bool Bracket::is_point() const { return mpfr_cmp(lo_, hi_) == 0; }

bool Bracket::finite() const {
  return mpfr_number_p(lo_) && mpfr_number_p(hi_);
}

double Bracket::width() const {
  mpfr_t w;
  init2(w);
  mpfr_sub(w, hi_, lo_, MPFR_RNDU);
  double d = mpfr_get_d(w, MPFR_RNDU);
  mpfr_clear(w);
  return d;
}

double Bracket::mid() const {
  mpfr_t m;
  init2(m);
  mpfr_add(m, lo_, hi_, MPFR_RNDN);
  mpfr_div_2ui(m, m, 1, MPFR_RNDN);
  double d = mpfr_get_d(m, MPFR_RNDN);
  mpfr_clear(m);
  return d;
}

std::string Bracket::str(int digits) const {
  char* s1 = nullptr;
  char* s2 = nullptr;
  mpfr_asprintf(&s1, "%.*Rg", digits, lo_);
  mpfr_asprintf(&s2, "%.*Rg", digits, hi_);
  std::string out = std::string("[") + s1 + ", " + s2 + "]";
  mpfr_free_str(s1);
  mpfr_free_str(s2);
  return out;
}

Bracket operator+(const Bracket& a, const Bracket& b) {
  Bracket r;
  mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

Bracket& Bracket::operator+=(const Bracket& b) {
  mpfr_add(lo_, lo_, b.lo_, MPFR_RNDD);
  mpfr_add(hi_, hi_, b.hi_, MPFR_RNDU);
  return *this;
}

Bracket operator-(const Bracket& a, const Bracket& b) {
  Bracket r;
  mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
  mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
  return r;
}

Bracket neg(const Bracket& a) {
  Bracket r;
  mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
  mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
  return r;
}

Bracket operator*(const Bracket& a, const Bracket& b) {
  // Fast path: both nonnegative (the common case here).
  if (mpfr_sgn(a.lo_) >= 0 && mpfr_sgn(b.lo_) >= 0) {
    Bracket r;
    mpfr_mul(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_mul(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    // 0 * inf: treat the product enclosure as [0, inf) contributions.
    if (mpfr_nan_p(r.lo_)) mpfr_set_zero(r.lo_, 1);
    if (mpfr_nan_p(r.hi_)) mpfr_set_inf(r.hi_, 1);
    return r;
  }
  mpfr_t c[8];
  for (auto& x : c) mpfr_init2(x, kBracketPrec);
  mpfr_mul(c[0], a.lo_, b.lo_, MPFR_RNDD);
  mpfr_mul(c[1], a.lo_, b.hi_, MPFR_RNDD);
  mpfr_mul(c[2], a.hi_, b.lo_, MPFR_RNDD);
  mpfr_mul(c[3], a.hi_, b.hi_, MPFR_RNDD);
  mpfr_mul(c[4], a.lo_, b.lo_, MPFR_RNDU);
  mpfr_mul(c[5], a.lo_, b.hi_, MPFR_RNDU);
  mpfr_mul(c[6], a.hi_, b.lo_, MPFR_RNDU);
  mpfr_mul(c[7], a.hi_, b.hi_, MPFR_RNDU);
  Bracket r;
  mpfr_set(r.lo_, c[0], MPFR_RNDD);
  mpfr_set(r.hi_, c[4], MPFR_RNDU);
  for (int i = 1; i < 4; ++i)
    if (!mpfr_nan_p(c[i]) && mpfr_cmp(c[i], r.lo_) < 0) mpfr_set(r.lo_, c[i], MPFR_RNDD);
  for (int i = 5; i < 8; ++i)
    if (!mpfr_nan_p(c[i]) && mpfr_cmp(c[i], r.hi_) > 0) mpfr_set(r.hi_, c[i], MPFR_RNDU);
  for (auto& x : c) mpfr_clear(x);
  return r;
}

Bracket recip(const Bracket& a) {
  if (mpfr_sgn(a.lo_) <= 0 && mpfr_sgn(a.hi_) >= 0)
    throw std::domain_error("recip: interval contains zero");
  Bracket r;
  mpfr_ui_div(r.lo_, 1, a.hi_, MPFR_RNDD);
  mpfr_ui_div(r.hi_, 1, a.lo_, MPFR_RNDU);
  return r;
}

Bracket operator/(const Bracket& a, const Bracket& b) { return a * recip(b); }

Bracket hull(const Bracket& a, const Bracket& b) {
  Bracket r;
  mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

Bracket Bracket::span_nonneg(const Bracket& lo_of, const Bracket& hi_of) {
  Bracket r;
  if (mpfr_sgn(lo_of.lo_) < 0)
    mpfr_set_zero(r.lo_, 1);
  else
    mpfr_set(r.lo_, lo_of.lo_, MPFR_RNDD);
  mpfr_set(r.hi_, hi_of.hi_, MPFR_RNDU);
  if (mpfr_cmp(r.lo_, r.hi_) > 0) throw std::logic_error("span_nonneg: crossed endpoints");
  return r;
}

Bracket intersect(const Bracket& a, const Bracket& b) {
  Bracket r;
  mpfr_max(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_min(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  if (mpfr_cmp(r.lo_, r.hi_) > 0)
    throw std::logic_error("intersect: empty intersection of enclosures");
  return r;
}

Bracket exp(const Bracket& a) {
  Bracket r;
  mpfr_exp(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_exp(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

Bracket log(const Bracket& a) {
  if (mpfr_sgn(a.lo_) <= 0) throw std::domain_error("log: nonpositive endpoint");
  Bracket r;
  mpfr_log(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_log(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

Bracket pow(const Bracket& base, const Bracket& expo) {
  if (mpfr_sgn(base.lo_) < 0) throw std::domain_error("pow: negative base");
  Bracket r;
  // Point exponent (the common case): x^e is monotone in x.
  if (mpfr_cmp(expo.lo_, expo.hi_) == 0) {
    if (mpfr_sgn(expo.lo_) >= 0) {
      mpfr_pow(r.lo_, base.lo_, expo.lo_, MPFR_RNDD);
      mpfr_pow(r.hi_, base.hi_, expo.hi_, MPFR_RNDU);
    } else {
      mpfr_pow(r.lo_, base.hi_, expo.lo_, MPFR_RNDD);
      mpfr_pow(r.hi_, base.lo_, expo.hi_, MPFR_RNDU);
    }
    if (mpfr_nan_p(r.lo_)) mpfr_set_zero(r.lo_, 1);
    if (mpfr_nan_p(r.hi_)) mpfr_set_inf(r.hi_, 1);
    return r;
  }
  // General case: evaluate all corners with both roundings.
  mpfr_t c;
  mpfr_init2(c, kBracketPrec);
  mpfr_set_inf(r.lo_, 1);
  mpfr_set_inf(r.hi_, -1);
  mpfr_srcptr bs[2] = {base.lo_, base.hi_};
  mpfr_srcptr es[2] = {expo.lo_, expo.hi_};
  for (auto* b : bs)
    for (auto* e : es) {
      mpfr_pow(c, b, e, MPFR_RNDD);
      if (!mpfr_nan_p(c) && mpfr_cmp(c, r.lo_) < 0) mpfr_set(r.lo_, c, MPFR_RNDD);
      mpfr_pow(c, b, e, MPFR_RNDU);
      if (!mpfr_nan_p(c) && mpfr_cmp(c, r.hi_) > 0) mpfr_set(r.hi_, c, MPFR_RNDU);
    }
  mpfr_clear(c);
  if (mpfr_sgn(r.lo_) < 0) mpfr_set_zero(r.lo_, 1);  // positive-base powers are >= 0
  return r;
}

Bracket pow_si(const Bracket& base, long e) {
  if (mpfr_sgn(base.lo_) < 0) throw std::domain_error("pow_si: negative base");
  Bracket r;
  if (e >= 0) {
    mpfr_pow_si(r.lo_, base.lo_, e, MPFR_RNDD);
    mpfr_pow_si(r.hi_, base.hi_, e, MPFR_RNDU);
  } else {
    mpfr_pow_si(r.lo_, base.hi_, e, MPFR_RNDD);
    mpfr_pow_si(r.hi_, base.lo_, e, MPFR_RNDU);
  }
  return r;
}

Bracket root_ui(const Bracket& a, unsigned long k) {
  if (mpfr_sgn(a.lo_) < 0) throw std::domain_error("root_ui: negative base");
  Bracket r;
#if MPFR_VERSION_MAJOR >= 4
  mpfr_rootn_ui(r.lo_, a.lo_, k, MPFR_RNDD);
  mpfr_rootn_ui(r.hi_, a.hi_, k, MPFR_RNDU);
#else
  mpfr_root(r.lo_, a.lo_, k, MPFR_RNDD);
  mpfr_root(r.hi_, a.hi_, k, MPFR_RNDU);
#endif
  return r;
}

Bracket sqrt(const Bracket& a) { return root_ui(a, 2); }

Bracket Bracket::log_mpz(const mpz_class& v) {
  if (v < 1) throw std::domain_error("log_mpz: v < 1");
  Bracket b = Bracket::from_mpz(v);
  return log(b);
}

Bracket Bracket::log1p_mpz(const mpz_class& v) {
  if (v < 0) throw std::domain_error("log1p_mpz: v < 0");
  return log_mpz(v + 1);
}

Bracket Bracket::neg_pow_mpz(const mpz_class& v, const Bracket& e) {
  if (v < 1) throw std::domain_error("neg_pow_mpz: v < 1");
  // v^(-e) = exp(-e log v)
  return exp(neg(e * log_mpz(v)));
}

}  // namespace cflim
