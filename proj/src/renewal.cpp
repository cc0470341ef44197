#include "cflim/renewal.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace cflim {

std::optional<GapAlphabet> decompose_gap_alphabet(const IndexSet& I, double gap_factor) {
  const std::vector<Run>* rs;
  try {
    rs = &I.runs();
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
  if (rs->empty()) return std::nullopt;
  mpz_class abs_floor(1048576);
  GapAlphabet ga;
  std::vector<Run> base_runs;
  mpz_class cur_max(0);
  for (const Run& r : *rs) {
    if (r.unbounded) return std::nullopt;
    bool far = cur_max > 0 && r.lo > cur_max + abs_floor;
    if (far) {
      // require r.lo >= gap_factor * cur_max as well
      mpz_class thresh = cur_max;
      mpz_class gf(static_cast<unsigned long>(gap_factor));
      thresh *= gf;
      far = r.lo >= thresh;
    }
    if (far) {
      ga.layers.push_back(GapLayer{{r}});
    } else if (!ga.layers.empty()) {
      ga.layers.back().runs.push_back(r);
    } else {
      base_runs.push_back(r);
    }
    cur_max = r.hi;
  }
  if (ga.layers.empty()) return std::nullopt;
  ga.base = base_runs.empty() ? IndexSet() : IndexSet::from_runs(base_runs);
  return ga;
}

namespace {

Bracket run_vector_weight(const std::vector<Run>& runs, const Bracket& two_t,
                          const std::optional<mpz_class>& top_hi) {
  Bracket w;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    mpz_class hi = runs[i].hi;
    if (top_hi && i + 1 == runs.size()) hi = *top_hi;
    if (hi < runs[i].lo) continue;
    IndexSet one = IndexSet::from_runs({Run{runs[i].lo, hi, false}});
    w += one.weight_sum(runs[i].lo, hi, Bracket(0.0), two_t);
  }
  return w;
}

}  // namespace

RenewalEvaluator::RenewalEvaluator(GapAlphabet ga, const Bracket& t, const RenewalOptions& opts)
    : ga_(std::move(ga)), t_(t), opts_(opts) {
  two_t_ = Bracket::from_int(2) * t_;
  distortion_pow_ = pow(Bracket::from_int(4), t_);
  if (!ga_.base.is_empty()) {
    LevelSumOptions lo;
    lo.max_depth = opts_.base_depth;
    lo.rel_tol = opts_.base_rel_tol;
    lo.node_budget = opts_.base_node_budget;
    lo.workers = opts_.workers;
    LevelSumTable table = compute_level_sums(ga_.base, t_, lo);
    base_sup_ = table.sup_sums;
    base_inf_ = table.inf_sums;
    // Growth factor of the base from the pinching roots.
    Bracket lo_b(0.0), hi_b = Bracket::pos_inf();
    for (std::size_t k = 1; k <= base_sup_.size(); ++k) {
      Bracket up = root_ui(base_sup_[k - 1], static_cast<unsigned long>(k));
      Bracket dn = root_ui(base_inf_[k - 1], static_cast<unsigned long>(k));
      if (up.hi() < hi_b.hi()) hi_b = up;
      if (dn.lo() > lo_b.lo()) lo_b = dn;
    }
    base_lambda_ = Bracket(std::max(0.0, lo_b.lo()), hi_b.hi());
  } else {
    base_lambda_ = Bracket(0.0);
  }
}

Bracket RenewalEvaluator::layer_weight(int idx, const std::optional<mpz_class>& top_hi,
                                       bool /*lower*/) const {
  const GapLayer& L = ga_.layers.at(idx);
  bool is_top = idx + 1 == static_cast<int>(ga_.layers.size());
  return run_vector_weight(L.runs, two_t_, is_top ? top_hi : std::nullopt);
}

RenewalEvaluator::Eval RenewalEvaluator::F_hi(int levels, const Bracket& z,
                                              const std::optional<mpz_class>& top_hi) const {
  Eval ev;
  if (levels == 0) {
    if (ga_.base.is_empty()) {
      ev.value = Bracket(1.0);
      ev.usable = true;
      return ev;
    }
    Bracket q = base_lambda_ * z;
    if (!(q.hi() < 1.0)) return ev;  // tail bound unavailable
    Bracket one = Bracket::from_int(1);
    Bracket val = one;
    Bracket zp = one;
    for (std::size_t l = 1; l <= base_sup_.size(); ++l) {
      zp = zp * z;
      val += base_sup_[l - 1] * zp;
    }
    // Sum_{l > L} S_l z^l <= 4^t (lam z)^(L+1) / (1 - lam z).
    Bracket tail = distortion_pow_ * pow_si(q, static_cast<long>(base_sup_.size()) + 1) / (one - q);
    ev.value = val + tail;
    ev.usable = true;
    return ev;
  }
  Eval prev = F_hi(levels - 1, z, top_hi);
  if (!prev.usable) return prev;
  Bracket W = layer_weight(levels - 1, top_hi, false);
  Bracket u = W * z * prev.value;
  if (!(u.hi() < 1.0)) {
    Eval bad;
    return bad;
  }
  Eval ev2;
  ev2.value = prev.value / (Bracket::from_int(1) - u);
  ev2.usable = true;
  return ev2;
}

RenewalEvaluator::Eval RenewalEvaluator::F_lo(int levels, const Bracket& z,
                                              const std::optional<mpz_class>& top_hi) const {
  Eval ev;
  if (levels == 0) {
    Bracket one = Bracket::from_int(1);
    Bracket val = one;
    if (!ga_.base.is_empty()) {
      Bracket zp = one;
      for (std::size_t l = 1; l <= base_inf_.size(); ++l) {
        zp = zp * z;
        // inf-derivative sums lower-bound the sup sums S_l.
        val += base_inf_[l - 1] * zp;
      }
    }
    ev.value = val;
    ev.usable = true;
    return ev;
  }
  Eval prev = F_lo(levels - 1, z, top_hi);
  if (prev.divergent) return prev;
  const GapLayer& L = ga_.layers.at(levels - 1);
  Bracket W = layer_weight(levels - 1, top_hi, true);
  // Per layer letter the exact splitting costs at most (1+1/min)^(4t).
  Bracket c = pow(Bracket::from_int(1) + recip(Bracket::from_mpz(L.min())),
                  neg(Bracket::from_int(4) * t_));
  Bracket u = c * W * z * prev.value;
  if (u.lo() >= 1.0) {
    ev.divergent = true;
    return ev;
  }
  if (u.hi() < 1.0) {
    ev.value = prev.value / (Bracket::from_int(1) - u);
  } else {
    ev.value = prev.value;  // still a valid lower bound (k = 0 term)
  }
  ev.usable = true;
  return ev;
}

Bracket RenewalEvaluator::lambda_impl(const std::optional<mpz_class>& top_hi) const {
  int m = static_cast<int>(ga_.layers.size());
  if (m == 0) return base_lambda_;

  auto conv = [&](double z) { return F_hi(m, Bracket(z), top_hi).usable; };
  auto not_divg = [&](double z) { return !F_lo(m, Bracket(z), top_hi).divergent; };

  // Both certificates are monotone in z (their defining quantities increase
  // with z), so each boundary is found by exponential movement + bisection.
  // Returns {largest z seen true, smallest z seen false}.
  auto boundary =
      [&](const std::function<bool(double)>& pred) -> std::pair<double, double> {
    double t = std::numeric_limits<double>::quiet_NaN();
    double f = std::numeric_limits<double>::quiet_NaN();
    if (pred(1.0)) {
      t = 1.0;
      double z = 2.0;
      while (pred(z)) {
        t = z;
        z *= 2.0;
        if (z > 1e15) return {t, f};
      }
      f = z;
    } else {
      f = 1.0;
      double z = 0.5;
      while (!pred(z)) {
        f = z;
        z *= 0.5;
        if (z < 1e-15) return {t, f};
      }
      t = z;
    }
    for (int i = 0; i < opts_.bisection_steps; ++i) {
      double mid = 0.5 * (t + f);
      if (mid == t || mid == f) break;
      (pred(mid) ? t : f) = mid;
    }
    return {t, f};
  };

  auto [z_conv, cf] = boundary(conv);
  auto [nd, z_divg] = boundary(not_divg);
  (void)cf;
  (void)nd;

  double hi_end = std::isnan(z_conv) ? std::numeric_limits<double>::infinity()
                                     : recip(Bracket(z_conv)).hi();
  double lo_end = std::isnan(z_divg) ? 0.0 : recip(Bracket(z_divg)).lo();
  lo_end = std::max(lo_end, base_lambda_.lo());
  if (lo_end > hi_end) throw std::logic_error("renewal: crossed growth-factor bracket");
  return Bracket(lo_end, hi_end);
}

Bracket RenewalEvaluator::lambda_bracket() const { return lambda_impl(std::nullopt); }

Bracket RenewalEvaluator::lambda_with_top_end(const mpz_class& hi) const {
  if (ga_.layers.empty()) throw std::logic_error("renewal: no layer to adjust");
  if (hi < ga_.layers.back().runs.back().lo)
    throw std::invalid_argument("renewal: top end below layer start");
  return lambda_impl(hi);
}

}  // namespace cflim
