#include "cflim/contfrac.hpp"

#include <stdexcept>

namespace cflim {

void DigitWord::append(const mpz_class& digit) {
  if (digit < 1) throw std::invalid_argument("DigitWord::append: digit must be >= 1");
  mpz_class p_new = digit * p_cur + p_prev;
  mpz_class q_new = digit * q_cur + q_prev;
  p_prev = p_cur;
  q_prev = q_cur;
  p_cur = p_new;
  q_cur = q_new;
  digits.push_back(digit);
}

DigitWord DigitWord::from(const std::vector<unsigned long>& ds) {
  DigitWord w;
  for (unsigned long d : ds) w.append_ui(d);
  return w;
}

DigitWord DigitWord::from_digits(const std::vector<mpz_class>& ds) {
  DigitWord w;
  for (const auto& d : ds) w.append(d);
  return w;
}

mpq_class DigitWord::value() const {
  mpq_class v(p_cur, q_cur);
  v.canonicalize();
  return v;
}

mpz_class DigitWord::unimodular_det() const { return p_cur * q_prev - p_prev * q_cur; }

std::pair<mpq_class, mpq_class> DigitWord::cylinder() const {
  if (empty()) return {mpq_class(0), mpq_class(1)};
  mpq_class a(p_cur, q_cur);
  mpq_class b(p_prev + p_cur, q_prev + q_cur);
  a.canonicalize();
  b.canonicalize();
  if (a > b) std::swap(a, b);
  return {a, b};
}

mpq_class DigitWord::cylinder_length() const {
  mpq_class len(1, q_cur * (q_cur + q_prev));
  len.canonicalize();
  return len;
}

mpq_class DigitWord::sup_derivative() const {
  if (empty()) throw std::domain_error("sup_derivative: empty word");
  mpq_class r(1, q_cur * q_cur);
  r.canonicalize();
  return r;
}

mpq_class DigitWord::distortion_ratio() const {
  if (empty()) throw std::domain_error("distortion_ratio: empty word");
  mpz_class s = q_prev + q_cur;
  mpq_class r(s * s, q_cur * q_cur);
  r.canonicalize();
  return r;
}

std::pair<Bracket, Bracket> DigitWord::log_q_slacks() const {
  if (empty()) throw std::domain_error("log_q_slacks: empty word");
  Bracket eta_sum;
  for (const auto& d : digits) eta_sum += Bracket::log1p_mpz(d);
  Bracket logq = Bracket::log_mpz(q_cur);
  Bracket half = Bracket::from_mpq(mpq_class(1, 2));
  Bracket log_sqrt2 = half * Bracket::log_mpz(mpz_class(2));
  Bracket lower = logq - (half * eta_sum - log_sqrt2);
  Bracket upper = eta_sum - logq;
  return {lower, upper};
}

std::pair<mpz_class, mpq_class> gauss_step(const mpq_class& x) {
  if (x < 0 || x > 1) throw std::domain_error("gauss_step: x outside [0,1]");
  if (x == 0) return {mpz_class(0), mpq_class(0)};
  // 1/x = den/num; digit = floor(den/num), rest = (den - digit*num)/num.
  const mpz_class& num = x.get_num();
  const mpz_class& den = x.get_den();
  mpz_class digit, rem;
  mpz_fdiv_qr(digit.get_mpz_t(), rem.get_mpz_t(), den.get_mpz_t(), num.get_mpz_t());
  mpq_class rest(rem, num);
  rest.canonicalize();
  return {digit, rest};
}

std::pair<mpz_class, Bracket> xi_eta(const mpq_class& x) {
  if (x <= 0 || x > 1) throw std::domain_error("xi_eta: x outside (0,1]");
  const mpz_class& num = x.get_num();
  const mpz_class& den = x.get_den();
  mpz_class xi;
  mpz_fdiv_q(xi.get_mpz_t(), den.get_mpz_t(), num.get_mpz_t());
  return {xi, Bracket::log1p_mpz(xi)};
}

CFPoint::CFPoint(const mpq_class& x) : rational_(x), rest_(x) {
  if (x < 0 || x > 1) throw std::domain_error("CFPoint: rational outside [0,1]");
  if (x == 0) exhausted_ = true;
}

CFPoint::CFPoint(std::function<mpz_class(std::size_t)> digit_fn)
    : digit_fn_(std::move(digit_fn)) {}

const mpq_class& CFPoint::rational() const {
  if (!rational_) throw std::logic_error("CFPoint::rational: lazy stream");
  return *rational_;
}

void CFPoint::realize_next() {
  if (exhausted_) throw std::out_of_range("CFPoint: expansion exhausted");
  if (rational_) {
    auto [d, rest] = gauss_step(rest_);
    word_.append(d);
    rest_ = rest;
    if (rest_ == 0) exhausted_ = true;
  } else {
    word_.append(digit_fn_(word_.size()));
  }
}

const mpz_class& CFPoint::digit(std::size_t i) {
  while (word_.size() <= i) realize_next();
  return word_.digits[i];
}

Bracket CFPoint::value(mpfr_prec_t prec) {
  if (rational_ && exhausted_ && word_.empty()) return Bracket::from_mpq(*rational_);
  mpq_class target(1);
  target >>= static_cast<unsigned long>(prec);
  while (!exhausted_ && word_.cylinder_length() > target) realize_next();
  if (rational_ && exhausted_) return Bracket::from_mpq(*rational_);
  auto [a, b] = word_.cylinder();
  return hull(Bracket::from_mpq(a), Bracket::from_mpq(b));
}

}  // namespace cflim
