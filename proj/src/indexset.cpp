#include "cflim/indexset.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace cflim {

using Family = IndexSet::Family;

namespace {

// Directed integral of (x+s)^(-e) over [a, b] (or [a, inf)).  Returns
// nullopt when no usable closed form applies (caller falls back to coarse
// endpoint bounds).  Integrand must be positive on the range.
std::optional<Bracket> int_pow(const Bracket& a, const std::optional<Bracket>& b,
                               const Bracket& s, const Bracket& e) {
  Bracket u = a + s;
  Bracket one = Bracket::from_int(1);
  bool e_is_one = e.is_point() && e.contains(1.0);
  if (!b) {
    if (e.lo() > 1.0) {
      // u^(1-e) / (e-1)
      return pow(u, one - e) / (e - one);
    }
    if (e.hi() <= 1.0) return Bracket::pos_inf();  // certainly divergent
    return Bracket::zero_to_inf();                 // exponent enclosure straddles 1
  }
  Bracket v = *b + s;
  if (e_is_one) return log(v) - log(u);
  if (e.lo() > 1.0) {
    Bracket em1 = e - one;
    return (pow(u, neg(em1)) - pow(v, neg(em1))) / em1;
  }
  if (e.hi() < 1.0) {
    Bracket om = one - e;
    return (pow(v, om) - pow(u, om)) / om;
  }
  return std::nullopt;
}

Bracket term_pow(const mpz_class& i, const Bracket& shift, const Bracket& expo) {
  return pow(Bracket::from_mpz(i) + shift, neg(expo));
}

// Certified sum over one run of consecutive integers [a, b] (b empty =>
// unbounded) of (i+shift)^(-expo).  Requires a + shift > 0.
Bracket run_weight_sum(const mpz_class& a, const std::optional<mpz_class>& b,
                       const Bracket& shift, const Bracket& expo) {
  if (b && *b < a) return Bracket();
  if (b) {
    mpz_class n = *b - a + 1;
    if (n <= 8) {
      Bracket sum;
      for (mpz_class i = a; i <= *b; ++i) sum += term_pow(i, shift, expo);
      return sum;
    }
  }
  Bracket fa = term_pow(a, shift, expo);
  Bracket alo = Bracket::from_mpz(a);
  std::optional<Bracket> bb;
  std::optional<Bracket> bb1;
  if (b) {
    bb = Bracket::from_mpz(*b);
    bb1 = Bracket::from_mpz(*b + 1);
  }
  // Monotone decreasing integrand:  int_a^{b+1} f  <=  sum  <=  f(a) + int_a^b f.
  auto ilo = int_pow(alo, bb1, shift, expo);
  auto ihi = int_pow(alo, bb, shift, expo);
  if (!ilo || !ihi) {
    // Coarse fallback for odd exponent enclosures on a bounded run.
    Bracket n = Bracket::from_mpz(*b - a + 1);
    Bracket fb = term_pow(*b, shift, expo);
    return hull(n * fb, n * fa);
  }
  return Bracket::span_nonneg(*ilo, fa + *ihi);
}

mpz_class floor_div(const mpz_class& a, const mpz_class& b) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

}  // namespace

class IndexSet::Impl {
 public:
  virtual ~Impl() = default;
  virtual Family family() const = 0;
  virtual double family_param() const { return 0.0; }
  virtual std::string describe() const = 0;
  virtual bool is_finite() const = 0;
  virtual std::optional<mpz_class> finite_count() const = 0;
  virtual bool is_empty() const { return is_finite() && *finite_count() == 0; }
  virtual mpz_class min_element() const = 0;
  virtual std::optional<mpz_class> max_element() const = 0;
  virtual bool contains(const mpz_class& x) const = 0;
  virtual mpz_class count_upto(const mpz_class& x) const = 0;
  virtual std::optional<mpz_class> element_at(const mpz_class& k) const = 0;
  virtual Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                             const Bracket& shift, const Bracket& expo) const = 0;
  virtual std::optional<double> theta_exact() const { return std::nullopt; }
  virtual const std::vector<Run>* runs() const { return nullptr; }

  std::optional<mpz_class> next_element(const mpz_class& x) const {
    mpz_class below = x <= 1 ? mpz_class(0) : count_upto(x - 1);
    return element_at(below);
  }
};

namespace {

class EmptyImpl final : public IndexSet::Impl {
 public:
  Family family() const override { return Family::finite; }
  std::string describe() const override { return "empty"; }
  bool is_finite() const override { return true; }
  std::optional<mpz_class> finite_count() const override { return mpz_class(0); }
  mpz_class min_element() const override { throw std::domain_error("empty set"); }
  std::optional<mpz_class> max_element() const override { return std::nullopt; }
  bool contains(const mpz_class&) const override { return false; }
  mpz_class count_upto(const mpz_class&) const override { return 0; }
  std::optional<mpz_class> element_at(const mpz_class&) const override { return std::nullopt; }
  Bracket weight_sum(const mpz_class&, const std::optional<mpz_class>&, const Bracket&,
                     const Bracket&) const override {
    return Bracket();
  }
  std::optional<double> theta_exact() const override { return 0.0; }
  const std::vector<Run>* runs() const override {
    static const std::vector<Run> kNone;
    return &kNone;
  }
};

class RunsImpl final : public IndexSet::Impl {
 public:
  RunsImpl(std::vector<Run> runs, Family tag) : runs_(std::move(runs)), tag_(tag) {
    mpz_class prev(0);
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const Run& r = runs_[i];
      if (r.lo < 1) throw std::invalid_argument("IndexSet: elements must be >= 1");
      if (r.lo <= prev) throw std::invalid_argument("IndexSet: runs must be sorted/disjoint");
      if (r.unbounded) {
        if (i + 1 != runs_.size())
          throw std::invalid_argument("IndexSet: unbounded run must be last");
      } else {
        if (r.hi < r.lo) throw std::invalid_argument("IndexSet: bad run");
        prev = r.hi + 1;  // adjacent runs must be coalesced by the builder
      }
    }
    // Prefix counts for rank queries.
    mpz_class acc(0);
    prefix_.reserve(runs_.size());
    for (const Run& r : runs_) {
      prefix_.push_back(acc);
      if (!r.unbounded) acc += r.hi - r.lo + 1;
    }
    total_ = acc;
  }

  Family family() const override { return tag_; }
  std::string describe() const override {
    std::ostringstream os;
    os << "runs[" << runs_.size() << "]";
    return os.str();
  }
  bool is_finite() const override { return runs_.empty() || !runs_.back().unbounded; }
  std::optional<mpz_class> finite_count() const override {
    if (!is_finite()) return std::nullopt;
    return total_;
  }
  mpz_class min_element() const override {
    if (runs_.empty()) throw std::domain_error("empty set");
    return runs_.front().lo;
  }
  std::optional<mpz_class> max_element() const override {
    if (!is_finite() || runs_.empty()) return std::nullopt;
    return runs_.back().hi;
  }
  bool contains(const mpz_class& x) const override {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), x,
                               [](const mpz_class& v, const Run& r) { return v < r.lo; });
    if (it == runs_.begin()) return false;
    --it;
    return it->unbounded || x <= it->hi;
  }
  mpz_class count_upto(const mpz_class& x) const override {
    mpz_class c(0);
    for (const Run& r : runs_) {
      if (r.lo > x) break;
      mpz_class hi = r.unbounded ? x : std::min(r.hi, x);
      c += hi - r.lo + 1;
    }
    return c;
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const Run& r = runs_[i];
      mpz_class off = k - prefix_[i];
      if (off < 0) return std::nullopt;
      if (r.unbounded || off <= r.hi - r.lo) return mpz_class(r.lo + off);
    }
    return std::nullopt;
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    Bracket sum;
    for (const Run& r : runs_) {
      mpz_class a = std::max(r.lo, lo);
      std::optional<mpz_class> b;
      if (r.unbounded) {
        b = hi;
        if (!hi) b = std::nullopt;
      } else {
        b = hi ? std::min(r.hi, *hi) : r.hi;
      }
      if (b && *b < a) continue;
      if (hi && a > *hi) break;
      sum += run_weight_sum(a, b, shift, expo);
    }
    return sum;
  }
  std::optional<double> theta_exact() const override {
    if (is_finite()) return 0.0;
    return 0.5;  // cofinite tail
  }
  const std::vector<Run>* runs() const override { return &runs_; }

 private:
  std::vector<Run> runs_;
  std::vector<mpz_class> prefix_;
  mpz_class total_;
  Family tag_;
};

class FullImpl final : public IndexSet::Impl {
 public:
  Family family() const override { return Family::full; }
  std::string describe() const override { return "full"; }
  bool is_finite() const override { return false; }
  std::optional<mpz_class> finite_count() const override { return std::nullopt; }
  mpz_class min_element() const override { return 1; }
  std::optional<mpz_class> max_element() const override { return std::nullopt; }
  bool contains(const mpz_class& x) const override { return x >= 1; }
  mpz_class count_upto(const mpz_class& x) const override { return x < 0 ? mpz_class(0) : x; }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    return mpz_class(k + 1);
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    mpz_class a = std::max(lo, mpz_class(1));
    if (hi && *hi < a) return Bracket();
    return run_weight_sum(a, hi, shift, expo);
  }
  std::optional<double> theta_exact() const override { return 0.5; }
};

class GeometricImpl final : public IndexSet::Impl {
 public:
  explicit GeometricImpl(unsigned long a) : a_(a) {
    if (a < 2) throw std::invalid_argument("geometric: a must be >= 2");
  }
  Family family() const override { return Family::geometric; }
  double family_param() const override { return static_cast<double>(a_); }
  std::string describe() const override { return "geometric:" + std::to_string(a_); }
  bool is_finite() const override { return false; }
  std::optional<mpz_class> finite_count() const override { return std::nullopt; }
  mpz_class min_element() const override { return mpz_class(a_); }
  std::optional<mpz_class> max_element() const override { return std::nullopt; }
  bool contains(const mpz_class& x) const override {
    if (x < a_) return false;
    mpz_class v = x;
    while (v > 1) {
      if (v % a_ != 0) return false;
      v = floor_div(v, mpz_class(a_));
    }
    return true;
  }
  mpz_class count_upto(const mpz_class& x) const override {
    mpz_class c(0), p(a_);
    while (p <= x) {
      ++c;
      p *= a_;
    }
    return c;
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    if (k < 0 || !k.fits_ulong_p()) return std::nullopt;
    mpz_class p;
    unsigned long e = k.get_ui() + 1;
    mpz_ui_pow_ui(p.get_mpz_t(), a_, e);
    return p;
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    if (expo.hi() <= 0.0 && !hi) return Bracket::pos_inf();
    Bracket sum;
    mpz_class p(a_);
    int head = 0;
    while ((!hi || p <= *hi) && head < 96) {
      if (p >= lo) {
        sum += term_pow(p, shift, expo);
        ++head;
      }
      p *= a_;
    }
    if (!hi || p <= *hi) {
      // Geometric tail upper bound: terms <= p^(-e) with ratio a^(-e) < 1.
      Bracket r = pow(Bracket::from_int(static_cast<long>(a_)), neg(expo));
      if (!(r.hi() < 1.0)) return Bracket::span_nonneg(sum, Bracket::pos_inf());
      Bracket t = pow(Bracket::from_mpz(p), neg(expo));
      Bracket tail = t / (Bracket::from_int(1) - r);
      sum = Bracket::span_nonneg(sum, sum + tail);
    }
    return sum;
  }
  std::optional<double> theta_exact() const override { return 0.0; }

 private:
  unsigned long a_;
};

// All sums 1 + sum_{n in S} floor(2^(n/delta)) with S a finite subset of
// {1, 2, ...}.  The terms grow at ratio 2^(1/delta) > 2, so they form a
// superincreasing sequence and subset sums are order-isomorphic to binary
// counters: the k-th element is 1 + sum of terms at the set bits of k.
class I0Impl final : public IndexSet::Impl {
 public:
  explicit I0Impl(double delta) : delta_(delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("i0: delta in (0,1) required");
  }
  Family family() const override { return Family::i0; }
  double family_param() const override { return delta_; }
  std::string describe() const override {
    std::ostringstream os;
    os << "i0:" << delta_;
    return os.str();
  }
  bool is_finite() const override { return false; }
  std::optional<mpz_class> finite_count() const override { return std::nullopt; }
  mpz_class min_element() const override { return 1; }
  std::optional<mpz_class> max_element() const override { return std::nullopt; }

  bool contains(const mpz_class& x) const override {
    if (x < 1) return false;
    mpz_class y = x - 1;
    std::size_t n = terms_below(y + 1);
    std::lock_guard<std::mutex> g(mu_);
    for (std::size_t i = n; i-- > 0;) {
      if (terms_[i] <= y) y -= terms_[i];
      if (y == 0) return true;
    }
    return y == 0;
  }
  mpz_class count_upto(const mpz_class& x) const override {
    if (x < 1) return 0;
    mpz_class y = x - 1;
    std::size_t n = terms_below(y + 1);
    mpz_class rank(0);
    std::lock_guard<std::mutex> g(mu_);
    for (std::size_t i = n; i-- > 0;) {
      if (terms_[i] <= y) {
        y -= terms_[i];
        mpz_setbit(rank.get_mpz_t(), i);
      }
    }
    return rank + 1;
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    if (k < 0) return std::nullopt;
    mpz_class v(1);
    std::size_t top = mpz_sizeinbase(k.get_mpz_t(), 2);
    ensure_terms(top);
    std::lock_guard<std::mutex> g(mu_);
    for (std::size_t i = 0; i < top; ++i)
      if (mpz_tstbit(k.get_mpz_t(), i)) v += terms_[i];
    return v;
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    mpz_class a = std::max(lo, mpz_class(1));
    mpz_class below = a <= 1 ? mpz_class(0) : count_upto(a - 1);
    // Exact head by rank enumeration.
    Bracket sum;
    mpz_class k = below;
    int head = 0;
    mpz_class last = a - 1;
    while (head < 4096) {
      auto e = element_at(k);
      if (!e || (hi && *e > *hi)) return sum;  // range exhausted exactly
      sum += term_pow(*e, shift, expo);
      last = *e;
      ++k;
      ++head;
    }
    // Dyadic blocks with exact counts from `last` up to a horizon.
    mpz_class blo = last + 1;
    for (int j = 0; j < 160; ++j) {
      mpz_class bhi = blo * 2 - 1;
      if (hi && blo > *hi) return sum;
      mpz_class bh = hi ? std::min(bhi, *hi) : bhi;
      mpz_class cnt = count_upto(bh) - count_upto(blo - 1);
      if (cnt > 0) {
        Bracket w = hull(term_pow(bh, shift, expo), term_pow(blo, shift, expo));
        sum += Bracket::from_mpz(cnt) * w;
      }
      if (hi && bhi >= *hi) return sum;
      blo = bhi + 1;
    }
    // Analytic tail from count_upto(X) <= X^delta + 1, over dyadic blocks
    // [B*2^i, B*2^(i+1)):
    //   sum_{i in I, i > B} (i+s)^(-e)
    //     <= 2^d * B^(d-e) / (1 - 2^(d-e))  +  B^(-e) / (1 - 2^(-e)).
    Bracket d(delta_);
    Bracket e = expo;
    Bracket two = Bracket::from_int(2);
    Bracket B = Bracket::from_mpz(blo);
    Bracket r1 = pow(two, d - e);
    Bracket r2 = pow(two, neg(e));
    if (r1.hi() < 1.0 && r2.hi() < 1.0) {
      Bracket one = Bracket::from_int(1);
      Bracket t1 = pow(two, d) * pow(B, d - e) / (one - r1);
      Bracket t2 = pow(B, neg(e)) / (one - r2);
      return Bracket::span_nonneg(sum, sum + t1 + t2);
    }
    if (e.hi() <= delta_) return Bracket::pos_inf();
    return Bracket::span_nonneg(sum, Bracket::pos_inf());
  }
  std::optional<double> theta_exact() const override { return delta_ / 2.0; }

 private:
  // floor(2^(n/delta)) with a certified floor (escalating precision).
  mpz_class make_term(std::size_t n) const {
    for (mpfr_prec_t prec = 192; prec <= 1u << 14; prec *= 2) {
      mpfr_t xlo, xhi, p;
      mpfr_init2(xlo, prec);
      mpfr_init2(xhi, prec);
      mpfr_init2(p, prec);
      mpfr_set_ui(p, static_cast<unsigned long>(n), MPFR_RNDN);
      mpfr_div_d(xlo, p, delta_, MPFR_RNDD);
      mpfr_div_d(xhi, p, delta_, MPFR_RNDU);
      mpfr_exp2(xlo, xlo, MPFR_RNDD);
      mpfr_exp2(xhi, xhi, MPFR_RNDU);
      mpz_class flo, fhi;
      mpfr_get_z(flo.get_mpz_t(), xlo, MPFR_RNDD);
      mpfr_get_z(fhi.get_mpz_t(), xhi, MPFR_RNDD);
      mpfr_clear(xlo);
      mpfr_clear(xhi);
      mpfr_clear(p);
      if (flo == fhi) return flo;
    }
    throw std::runtime_error("i0: cannot certify floor(2^(n/delta))");
  }
  void ensure_terms(std::size_t n) const {
    std::lock_guard<std::mutex> g(mu_);
    while (terms_.size() < n) {
      std::size_t idx = terms_.size() + 1;  // 1-based term index
      mpz_class t = make_term(idx);
      if (!terms_.empty() && t < 2 * terms_.back())
        throw std::domain_error("i0: term growth below 2x; delta too close to 1");
      terms_.push_back(t);
    }
  }
  // Number of terms <= y (realizing as needed).
  std::size_t terms_below(const mpz_class& y) const {
    std::size_t n = 0;
    for (;;) {
      ensure_terms(n + 1);
      std::lock_guard<std::mutex> g(mu_);
      if (terms_[n] > y) return n;
      ++n;
    }
  }

  double delta_;
  mutable std::mutex mu_;
  mutable std::vector<mpz_class> terms_;
};

class AffineImpl final : public IndexSet::Impl {
 public:
  AffineImpl(IndexSet base, long mul, long add) : base_(std::move(base)), mul_(mul), add_(add) {
    if (mul < 1) throw std::invalid_argument("affine: mul >= 1 required");
    if (!base_.is_empty() && mul_ * base_.min_element() + add_ < 1)
      throw std::invalid_argument("affine: image must stay >= 1");
  }
  Family family() const override { return base_.family(); }
  double family_param() const override { return base_.family_param(); }
  std::string describe() const override {
    std::ostringstream os;
    os << mul_ << "*(" << base_.describe() << ")" << (add_ >= 0 ? "+" : "") << add_;
    return os.str();
  }
  bool is_finite() const override { return base_.is_finite(); }
  std::optional<mpz_class> finite_count() const override { return base_.finite_count(); }
  bool is_empty() const override { return base_.is_empty(); }
  mpz_class min_element() const override { return mul_ * base_.min_element() + add_; }
  std::optional<mpz_class> max_element() const override {
    auto m = base_.max_element();
    if (!m) return std::nullopt;
    return mpz_class(mul_ * *m + add_);
  }
  bool contains(const mpz_class& x) const override {
    mpz_class y = x - add_;
    if (y < mul_ || y % mul_ != 0) return false;
    return base_.contains(floor_div(y, mpz_class(mul_)));
  }
  mpz_class count_upto(const mpz_class& x) const override {
    mpz_class y = x - add_;
    if (y < mul_) return 0;
    return base_.count_upto(floor_div(y, mpz_class(mul_)));
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    auto e = base_.element_at(k);
    if (!e) return std::nullopt;
    return mpz_class(mul_ * *e + add_);
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    // sum (m*x + a + s)^(-e) = m^(-e) * sum (x + (a+s)/m)^(-e)
    mpz_class blo = lo - add_ < mul_ ? mpz_class(1) : floor_div(lo - add_ + mul_ - 1, mpz_class(mul_));
    std::optional<mpz_class> bhi;
    if (hi) {
      mpz_class y = *hi - add_;
      if (y < mul_) return Bracket();
      bhi = floor_div(y, mpz_class(mul_));
    }
    Bracket m = Bracket::from_int(mul_);
    Bracket s2 = (shift + Bracket::from_int(add_)) / m;
    Bracket scale = pow(m, neg(expo));
    return scale * base_.weight_sum(blo, bhi, s2, expo);
  }
  std::optional<double> theta_exact() const override { return base_.theta_exact(); }

 private:
  IndexSet base_;
  long mul_, add_;
};

class BoundedImpl final : public IndexSet::Impl {
 public:
  BoundedImpl(IndexSet base, mpz_class lo, std::optional<mpz_class> hi)
      : base_(std::move(base)), lo_(std::move(lo)), hi_(std::move(hi)) {
    below_ = lo_ <= 1 ? mpz_class(0) : base_.count_upto(lo_ - 1);
  }
  Family family() const override { return base_.family(); }
  double family_param() const override { return base_.family_param(); }
  std::string describe() const override {
    std::ostringstream os;
    os << base_.describe() << " in [" << lo_.get_str() << ", "
       << (hi_ ? hi_->get_str() : std::string("inf")) << "]";
    return os.str();
  }
  bool is_finite() const override { return hi_.has_value() || base_.is_finite(); }
  std::optional<mpz_class> finite_count() const override {
    if (hi_) return mpz_class(base_.count_upto(*hi_) - below_);
    auto c = base_.finite_count();
    if (!c) return std::nullopt;
    return mpz_class(*c - below_);
  }
  mpz_class min_element() const override {
    auto e = base_.element_at(below_);
    if (!e || (hi_ && *e > *hi_)) throw std::domain_error("empty set");
    return *e;
  }
  std::optional<mpz_class> max_element() const override {
    if (hi_) {
      mpz_class c = base_.count_upto(*hi_);
      if (c <= below_) return std::nullopt;
      return base_.element_at(c - 1);
    }
    return base_.max_element();
  }
  bool contains(const mpz_class& x) const override {
    if (x < lo_ || (hi_ && x > *hi_)) return false;
    return base_.contains(x);
  }
  mpz_class count_upto(const mpz_class& x) const override {
    mpz_class cap = hi_ ? std::min(x, *hi_) : x;
    if (cap < lo_) return 0;
    return base_.count_upto(cap) - below_;
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    auto e = base_.element_at(k + below_);
    if (!e || (hi_ && *e > *hi_)) return std::nullopt;
    return e;
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    mpz_class a = std::max(lo, lo_);
    std::optional<mpz_class> b = hi;
    if (hi_) b = b ? std::min(*b, *hi_) : *hi_;
    if (b && *b < a) return Bracket();
    return base_.weight_sum(a, b, shift, expo);
  }
  std::optional<double> theta_exact() const override {
    if (is_finite()) return 0.0;
    return base_.theta_exact();
  }

 private:
  IndexSet base_;
  mpz_class lo_;
  std::optional<mpz_class> hi_;
  mpz_class below_;
};

class UnionImpl final : public IndexSet::Impl {
 public:
  UnionImpl(std::vector<IndexSet> parts, Family tag, double param)
      : parts_(std::move(parts)), tag_(tag), param_(param) {}
  Family family() const override { return tag_; }
  double family_param() const override { return param_; }
  std::string describe() const override {
    std::ostringstream os;
    os << "union(";
    for (std::size_t i = 0; i < parts_.size(); ++i)
      os << (i ? ", " : "") << parts_[i].describe();
    os << ")";
    return os.str();
  }
  bool is_finite() const override {
    for (const auto& p : parts_)
      if (!p.is_finite()) return false;
    return true;
  }
  std::optional<mpz_class> finite_count() const override {
    mpz_class c(0);
    for (const auto& p : parts_) {
      auto pc = p.finite_count();
      if (!pc) return std::nullopt;
      c += *pc;
    }
    return c;
  }
  bool is_empty() const override {
    for (const auto& p : parts_)
      if (!p.is_empty()) return false;
    return true;
  }
  mpz_class min_element() const override {
    std::optional<mpz_class> m;
    for (const auto& p : parts_) {
      if (p.is_empty()) continue;
      mpz_class pm = p.min_element();
      if (!m || pm < *m) m = pm;
    }
    if (!m) throw std::domain_error("empty set");
    return *m;
  }
  std::optional<mpz_class> max_element() const override {
    if (!is_finite()) return std::nullopt;
    std::optional<mpz_class> m;
    for (const auto& p : parts_) {
      auto pm = p.max_element();
      if (pm && (!m || *pm > *m)) m = pm;
    }
    return m;
  }
  bool contains(const mpz_class& x) const override {
    for (const auto& p : parts_)
      if (p.contains(x)) return true;
    return false;
  }
  mpz_class count_upto(const mpz_class& x) const override {
    mpz_class c(0);
    for (const auto& p : parts_) c += p.count_upto(x);
    return c;
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    // Smallest v with count_upto(v) >= k+1 by value bisection.  The k-th
    // element of any single part bounds the union's k-th element above.
    mpz_class target = k + 1;
    std::optional<mpz_class> hi;
    for (const auto& p : parts_) {
      auto e = p.element_at(k);
      if (e && (!hi || *e < *hi)) hi = e;
    }
    if (!hi) return std::nullopt;
    mpz_class lo(1), h = *hi;
    while (lo < h) {
      mpz_class mid = (lo + h) / 2;
      if (count_upto(mid) >= target)
        h = mid;
      else
        lo = mid + 1;
    }
    if (!contains(lo)) return std::nullopt;
    return lo;
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    Bracket sum;
    for (const auto& p : parts_) sum += p.weight_sum(lo, hi, shift, expo);
    return sum;
  }
  std::optional<double> theta_exact() const override {
    if (tag_ == Family::combined) return param_ / 2.0;
    double th = 0.0;
    for (const auto& p : parts_) {
      auto t = p.theta_exact();
      if (!t) return std::nullopt;
      th = std::max(th, *t);
    }
    return th;
  }
  const std::vector<IndexSet>& parts() const { return parts_; }

 private:
  std::vector<IndexSet> parts_;
  Family tag_;
  double param_;
};

class CustomImpl final : public IndexSet::Impl {
 public:
  CustomImpl(IndexSet::CustomOracles o, std::string label)
      : o_(std::move(o)), label_(std::move(label)) {
    if (!o_.element) throw std::invalid_argument("custom: element oracle required");
  }
  Family family() const override { return Family::custom; }
  std::string describe() const override { return "custom:" + label_; }
  bool is_finite() const override { return false; }  // treat as open-ended
  std::optional<mpz_class> finite_count() const override { return std::nullopt; }
  mpz_class min_element() const override {
    auto e = o_.element(0);
    if (!e) throw std::domain_error("empty set");
    return *e;
  }
  std::optional<mpz_class> max_element() const override { return std::nullopt; }
  bool contains(const mpz_class& x) const override {
    mpz_class c = count_upto(x);
    if (c == 0) return false;
    auto e = element_at(c - 1);
    return e && *e == x;
  }
  mpz_class count_upto(const mpz_class& x) const override {
    if (o_.count_upto) return o_.count_upto(x);
    std::uint64_t k = 0;
    while (true) {
      auto e = cached(k);
      if (!e || *e > x) return k;
      ++k;
      if (k > (1u << 22)) throw std::runtime_error("custom: enumeration budget exceeded");
    }
  }
  std::optional<mpz_class> element_at(const mpz_class& k) const override {
    if (k < 0 || !k.fits_ulong_p()) return std::nullopt;
    return cached(k.get_ui());
  }
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const override {
    Bracket sum;
    std::uint64_t k = lo <= 1 ? 0 : count_upto(lo - 1).get_ui();
    mpz_class last = lo - 1;
    for (int head = 0; head < 65536; ++head, ++k) {
      auto e = cached(k);
      if (!e || (hi && *e > *hi)) return sum;
      sum += term_pow(*e, shift, expo);
      last = *e;
    }
    // Beyond the enumeration horizon: user tail bound, else the full-set
    // tail (valid since I is a subset of the positive integers).
    Bracket tail;
    if (o_.tail_upper) {
      tail = o_.tail_upper(last, shift, expo);
    } else {
      tail = run_weight_sum(last + 1, hi, shift, expo);
    }
    return Bracket::span_nonneg(sum, sum + tail);
  }
  std::optional<double> theta_exact() const override { return o_.theta_exact; }

 private:
  std::optional<mpz_class> cached(std::uint64_t k) const {
    std::lock_guard<std::mutex> g(mu_);
    while (memo_.size() <= k) {
      if (done_) return std::nullopt;
      auto e = o_.element(memo_.size());
      if (!e) {
        done_ = true;
        return std::nullopt;
      }
      if (!memo_.empty() && *e <= memo_.back())
        throw std::logic_error("custom: enumerator not strictly increasing");
      memo_.push_back(*e);
    }
    return memo_[k];
  }
  IndexSet::CustomOracles o_;
  std::string label_;
  mutable std::mutex mu_;
  mutable std::vector<mpz_class> memo_;
  mutable bool done_ = false;
};

}  // namespace

IndexSet::IndexSet() : impl_(std::make_shared<EmptyImpl>()) {}
IndexSet::IndexSet(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

IndexSet IndexSet::full() { return IndexSet(std::make_shared<FullImpl>()); }

IndexSet IndexSet::from_elements(std::vector<mpz_class> elems) {
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  std::vector<Run> runs;
  for (const auto& e : elems) {
    if (!runs.empty() && e == runs.back().hi + 1)
      runs.back().hi = e;
    else
      runs.push_back(Run{e, e, false});
  }
  if (runs.empty()) return IndexSet();
  return IndexSet(std::make_shared<RunsImpl>(std::move(runs), Family::finite));
}

IndexSet IndexSet::from_runs(std::vector<Run> runs, Family tag) {
  if (runs.empty()) return IndexSet();
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.lo < b.lo; });
  std::vector<Run> merged;
  for (const Run& r : runs) {
    if (!merged.empty() && !merged.back().unbounded && r.lo <= merged.back().hi + 1) {
      if (r.unbounded) {
        merged.back().unbounded = true;
      } else {
        merged.back().hi = std::max(merged.back().hi, r.hi);
      }
    } else {
      merged.push_back(r);
    }
  }
  return IndexSet(std::make_shared<RunsImpl>(std::move(merged), tag));
}

IndexSet IndexSet::geometric(unsigned long a) {
  return IndexSet(std::make_shared<GeometricImpl>(a));
}

IndexSet IndexSet::i0(double delta) { return IndexSet(std::make_shared<I0Impl>(delta)); }

IndexSet IndexSet::affine(const IndexSet& base, long mul, long add) {
  return IndexSet(std::make_shared<AffineImpl>(base, mul, add));
}

IndexSet IndexSet::union_of(std::vector<IndexSet> parts, Family tag, double param) {
  return IndexSet(std::make_shared<UnionImpl>(std::move(parts), tag, param));
}

IndexSet IndexSet::tail_above(const IndexSet& base, const mpz_class& cutoff) {
  return IndexSet(std::make_shared<BoundedImpl>(base, cutoff + 1, std::nullopt));
}

IndexSet IndexSet::truncate(const IndexSet& base, const mpz_class& cutoff) {
  return IndexSet(std::make_shared<BoundedImpl>(base, mpz_class(1), cutoff));
}

IndexSet IndexSet::custom(CustomOracles oracles, std::string label) {
  return IndexSet(std::make_shared<CustomImpl>(std::move(oracles), std::move(label)));
}

IndexSet::Family IndexSet::family() const { return impl_->family(); }
double IndexSet::family_param() const { return impl_->family_param(); }
std::string IndexSet::describe() const { return impl_->describe(); }
bool IndexSet::is_empty() const { return impl_->is_empty(); }
bool IndexSet::is_finite() const { return impl_->is_finite(); }
std::optional<mpz_class> IndexSet::finite_count() const { return impl_->finite_count(); }
mpz_class IndexSet::min_element() const { return impl_->min_element(); }
std::optional<mpz_class> IndexSet::max_element() const { return impl_->max_element(); }
bool IndexSet::contains(const mpz_class& x) const { return impl_->contains(x); }
mpz_class IndexSet::count_upto(const mpz_class& x) const { return impl_->count_upto(x); }
std::optional<mpz_class> IndexSet::next_element(const mpz_class& x) const {
  return impl_->next_element(x);
}
std::optional<mpz_class> IndexSet::element_at(const mpz_class& k) const {
  return impl_->element_at(k);
}

void IndexSet::for_each(const mpz_class& bound,
                        const std::function<bool(const mpz_class&)>& f) const {
  mpz_class k(0);
  for (;;) {
    auto e = impl_->element_at(k);
    if (!e || *e > bound) return;
    if (!f(*e)) return;
    ++k;
  }
}

void IndexSet::for_each_run(const mpz_class& bound,
                            const std::function<bool(const Run&)>& f) const {
  if (const auto* rs = impl_->runs()) {
    for (const Run& r : *rs) {
      if (r.lo > bound) return;
      Run c = r;
      if (c.unbounded || c.hi > bound) {
        c.hi = bound;
        c.unbounded = false;
      }
      if (!f(c)) return;
    }
    return;
  }
  // Generic coalescing enumeration.
  std::optional<Run> cur;
  bool stopped = false;
  for_each(bound, [&](const mpz_class& e) {
    if (cur && e == cur->hi + 1) {
      cur->hi = e;
    } else {
      if (cur && !f(*cur)) {
        stopped = true;
        return false;
      }
      cur = Run{e, e, false};
    }
    return true;
  });
  if (cur && !stopped) f(*cur);
}

std::vector<mpz_class> IndexSet::first_n(std::size_t n) const {
  std::vector<mpz_class> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto e = impl_->element_at(mpz_class(static_cast<unsigned long>(k)));
    if (!e) break;
    out.push_back(*e);
  }
  return out;
}

Bracket IndexSet::weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                             const Bracket& shift, const Bracket& expo) const {
  return impl_->weight_sum(lo, hi, shift, expo);
}

Bracket IndexSet::tail_lower_increments(const mpz_class& K, const Bracket& e) const {
  // sum_{i > K} (1/(i+1))^e = sum (i+1)^(-e)
  return weight_sum(K + 1, std::nullopt, Bracket::from_int(1), e);
}

Bracket IndexSet::tail_upper_increments(const mpz_class& K, const Bracket& e) const {
  // sum_{i > K} (2/(i+2))^e = 2^e * sum (i+2)^(-e)
  Bracket scale = pow(Bracket::from_int(2), e);
  return scale * weight_sum(K + 1, std::nullopt, Bracket::from_int(2), e);
}

const std::vector<Run>& IndexSet::runs() const {
  const auto* rs = impl_->runs();
  if (!rs) throw std::logic_error("IndexSet::runs: not an explicit runs set");
  return *rs;
}

std::optional<double> IndexSet::theta_exact() const { return impl_->theta_exact(); }

IndexSet parse_index_set(const std::string& spec) {
  if (spec == "full" || spec == "N") return IndexSet::full();
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    std::string fam = spec.substr(0, colon);
    std::string arg = spec.substr(colon + 1);
    if (fam == "geometric") return IndexSet::geometric(std::stoul(arg));
    if (fam == "i0") return IndexSet::i0(std::stod(arg));
    throw std::invalid_argument("unknown alphabet family: " + fam);
  }
  std::vector<mpz_class> elems;
  std::string tok;
  std::istringstream is(spec);
  while (std::getline(is, tok, ',')) {
    auto b = tok.find_first_not_of(" \t");
    auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    elems.emplace_back(tok.substr(b, e - b + 1));
  }
  if (elems.empty()) throw std::invalid_argument("empty alphabet spec");
  for (const auto& x : elems)
    if (x < 1) throw std::invalid_argument("alphabet elements must be >= 1");
  return IndexSet::from_elements(std::move(elems));
}

IndexSet load_index_set_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open alphabet file: " + path);
  std::vector<mpz_class> elems;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    mpz_class v(line.substr(b, e - b + 1));
    if (v < 1) throw std::runtime_error("alphabet file: elements must be >= 1");
    if (!elems.empty() && v <= elems.back())
      throw std::runtime_error("alphabet file: elements must be strictly ascending");
    elems.push_back(v);
  }
  return IndexSet::from_elements(std::move(elems));
}

}  // namespace cflim
