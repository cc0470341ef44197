#include "cflim/pressure.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cflim/renewal.hpp"

namespace cflim {

namespace {

// Core bracket from a level-sum table: the inf-derivative sums are
// supermultiplicative (their k-th roots bound the growth factor from
// below, with no distortion constant) and the sup sums submultiplicative.
// The classical 4^(-t)-corrected sup-sum lower bound is dominated by the
// inf-sum bound but is kept as a second certified lower route.
Bracket bracket_from_table(const LevelSumTable& table, const Bracket& t) {
  Bracket lo(0.0);
  Bracket hi = Bracket::pos_inf();
  Bracket dist = pow(Bracket::from_int(4), neg(t));
  for (std::size_t k = 1; k <= table.sup_sums.size(); ++k) {
    Bracket up = root_ui(table.sup_sums[k - 1], static_cast<unsigned long>(k));
    if (up.hi() < hi.hi()) hi = up;
    Bracket dn = root_ui(table.inf_sums[k - 1], static_cast<unsigned long>(k));
    if (dn.lo() > lo.lo()) lo = dn;
    Bracket dn2 = root_ui(dist * table.sup_sums[k - 1], static_cast<unsigned long>(k));
    if (dn2.lo() > lo.lo()) lo = dn2;
  }
  double l = std::max(0.0, lo.lo());
  double h = hi.hi();
  if (l > h) throw std::logic_error("lambda: crossed bracket");
  return Bracket(l, h);
}

mpz_class default_truncation(const IndexSet& I, const Bracket& t) {
  // Double the cutoff until the upper increment tail is small; the caller
  // still sees the certified tail, this only balances the work split.
  mpz_class N(64);
  for (int i = 0; i < 14; ++i) {
    Bracket tail = I.tail_upper_increments(N, Bracket::from_int(2) * t);
    if (tail.hi() < 0.02) break;
    N *= 2;
  }
  return N;
}

}  // namespace

Bracket lambda_bracket(const IndexSet& I, const Bracket& t, const LambdaOptions& opts) {
  if (I.is_empty()) return Bracket(0.0);
  if (t.lo() < 0) throw std::domain_error("lambda_bracket: t >= 0 required");

  // Huge-gap run alphabets go through the block-renewal route; enumeration
  // cannot reach their digit scales.
  if (opts.allow_renewal && I.is_finite()) {
    auto ga = decompose_gap_alphabet(I);
    if (ga) {
      RenewalOptions ro;
      ro.workers = opts.workers;
      RenewalEvaluator ev(std::move(*ga), t, ro);
      return ev.lambda_bracket();
    }
  }

  LevelSumOptions lo;
  lo.max_depth = opts.max_depth;
  lo.rel_tol = opts.rel_tol;
  lo.node_budget = opts.node_budget;
  lo.fast_budget = opts.fast_budget;
  lo.workers = opts.workers;

  if (I.is_finite()) {
    LevelSumTable table = compute_level_sums(I, t, lo);
    return bracket_from_table(table, t);
  }

  // Infinite alphabet: enclose via the truncated system plus the certified
  // one-digit increment tails,
  //   lambda(trunc) + sum_{i>N} (1/(i+1))^(2t)
  //     <= lambda(I) <= lambda(trunc) + sum_{i>N} (2/(i+2))^(2t).
  mpz_class N = opts.truncate ? *opts.truncate : default_truncation(I, t);
  IndexSet trunc = IndexSet::truncate(I, N);
  LevelSumTable table = compute_level_sums(trunc, t, lo);
  Bracket core = bracket_from_table(table, t);
  Bracket two_t = Bracket::from_int(2) * t;
  Bracket tail_lo = I.tail_lower_increments(N, two_t);
  Bracket tail_hi = I.tail_upper_increments(N, two_t);
  double l = (Bracket(core.lo()) + tail_lo).lo();
  double h = (Bracket(core.hi()) + tail_hi).hi();
  return Bracket(std::max(0.0, l), h);
}

Bracket pressure_bracket(const IndexSet& I, const Bracket& t, const LambdaOptions& opts) {
  Bracket lam = lambda_bracket(I, t, opts);
  if (lam.lo() <= 0.0) {
    if (lam.hi() <= 0.0) throw std::domain_error("pressure: empty alphabet");
    return Bracket(-std::numeric_limits<double>::infinity(), log(Bracket(lam.hi())).hi());
  }
  return log(lam);
}

std::pair<Bracket, Bracket> kz_increment_bounds(const mpz_class& i, const Bracket& delta) {
  if (i < 2) throw std::domain_error("kz_increment_bounds: digit must be >= 2");
  if (delta.lo() <= 0) throw std::domain_error("kz_increment_bounds: delta > 0 required");
  Bracket two_d = Bracket::from_int(2) * delta;
  Bracket lower = pow(recip(Bracket::from_mpz(i + 1)), two_d);
  Bracket upper = pow(Bracket::from_int(2) / Bracket::from_mpz(i + 2), two_d);
  return {lower, upper};
}

DimensionResult bowen_dimension(const IndexSet& I, const DimensionOptions& opts) {
  DimensionResult res;
  if (I.is_empty()) {
    res.dim = Bracket(0.0);
    res.certified = true;
    return res;
  }

  int depth = opts.initial_depth;
  auto lam = [&](double t) {
    LambdaOptions lo;
    lo.max_depth = depth;
    lo.node_budget = opts.node_budget;
    lo.fast_budget = opts.fast_budget;
    lo.truncate = opts.truncate;
    lo.workers = opts.workers;
    // Tail/row precision scales with the bisection tolerance.
    lo.rel_tol = std::max(1e-6, opts.tol / 8.0);
    ++res.evaluations;
    return lambda_bracket(I, Bracket(t), lo);
  };

  // Establish an upper endpoint with growth factor certified below 1.
  double t_lo = 0.0;
  double t_hi = 1.0 + opts.tol / 2.0;
  bool have_hi = false;
  for (int tries = 0; tries < 40 && !have_hi; ++tries) {
    Bracket L = lam(t_hi);
    if (L.definitely_lt(1.0)) {
      have_hi = true;
    } else if (L.definitely_gt(1.0)) {
      t_lo = std::max(t_lo, t_hi);
      t_hi = t_hi * 1.5 + 0.1;
    } else if (depth < opts.max_depth) {
      depth = std::min(opts.max_depth, depth * 2);
    } else {
      t_hi = t_hi * 1.25 + 0.05;  // widen; dimension cannot exceed 1 anyway
    }
    if (t_hi > 8.0) break;
  }
  if (!have_hi) {
    res.dim = Bracket(t_lo, 8.0);
    res.depth_used = depth;
    return res;
  }

  int bisections = 0;
  while (t_hi - t_lo > opts.tol && bisections < opts.max_bisections) {
    double mid = 0.5 * (t_lo + t_hi);
    Bracket L = lam(mid);
    if (L.definitely_gt(1.0)) {
      t_lo = mid;
    } else if (L.definitely_lt(1.0)) {
      t_hi = mid;
    } else if (depth < opts.max_depth) {
      depth = std::min(opts.max_depth, depth * 2);
    } else {
      break;  // budget exhausted; return the best certified bracket
    }
    ++bisections;
  }
  res.dim = Bracket(t_lo, t_hi);
  res.certified = (t_hi - t_lo) <= opts.tol;
  res.depth_used = depth;
  return res;
}

ThetaResult theta_exponent(const IndexSet& I) {
  ThetaResult r;
  if (auto th = I.theta_exact()) {
    r.value = Bracket(*th);
    r.exact = true;
    return r;
  }
  // Slope fit of the counting function over dyadic scales: if
  // #(I cut [1,x]) grows like x^d then the threshold is d/2.
  mpz_class x(1024);
  double prev = I.count_upto(x).get_d();
  double dmin = 2.0, dmax = 0.0;
  bool any = false;
  for (int j = 0; j < 16; ++j) {
    x *= 2;
    double c = I.count_upto(x).get_d();
    if (prev > 0 && c > prev) {
      double slope = std::log2(c / prev);
      dmin = std::min(dmin, slope);
      dmax = std::max(dmax, slope);
      any = true;
    }
    prev = c;
  }
  if (!any) throw std::runtime_error("theta: unsupported set (no counting growth)");
  r.value = Bracket(std::max(0.0, dmin / 2.0), std::min(1.0, dmax / 2.0 + 1e-9));
  r.heuristic = true;
  return r;
}

std::string to_string(Regularity r) {
  switch (r) {
    case Regularity::regular: return "regular";
    case Regularity::strongly_regular: return "strongly-regular";
    case Regularity::cofinitely_regular: return "cofinitely-regular";
    case Regularity::not_regular: return "not-regular";
    case Regularity::undetermined: return "undetermined";
  }
  return "undetermined";
}

RegularityClassification classify_regularity(const IndexSet& I, const LambdaOptions& opts) {
  RegularityClassification rc;
  if (I.is_empty()) {
    rc.verdict = Regularity::undetermined;
    rc.reason = "empty alphabet";
    return rc;
  }
  if (I.is_finite()) {
    rc.verdict = Regularity::strongly_regular;
    rc.reason = "finite alphabet: the pressure at t = 0 is log of the alphabet size";
    rc.theta = Bracket(0.0);
    return rc;
  }
  ThetaResult th = theta_exponent(I);
  rc.theta = th.value;
  if (th.exact) {
    double theta = th.value.mid();
    // Divergence of the weight series at the threshold exponent.
    Bracket series = I.weight_sum(1, std::nullopt, Bracket(0.0),
                                  Bracket(2.0 * theta));
    if (!series.finite() && series.lo() > 1e300) {
      rc.verdict = Regularity::cofinitely_regular;
      rc.reason = "weight series diverges at the threshold exponent";
      return rc;
    }
    if (series.finite()) {
      // Threshold series converges: check for a certified positive finite
      // pressure to decide strong regularity, else not-regular.
      LambdaOptions lo = opts;
      for (double step : {0.02, 0.06, 0.15}) {
        double t = theta + step;
        if (t >= 1.0) break;
        Bracket lam = lambda_bracket(I, Bracket(t), lo);
        if (lam.definitely_gt(1.0) && lam.finite()) {
          rc.verdict = Regularity::strongly_regular;
          rc.reason = "certified positive finite pressure above the threshold";
          return rc;
        }
      }
      Bracket lam_th = lambda_bracket(I, Bracket(theta), lo);
      if (lam_th.definitely_lt(1.0)) {
        rc.verdict = Regularity::not_regular;
        rc.reason = "pressure certified negative at the threshold exponent";
        return rc;
      }
      rc.verdict = Regularity::undetermined;
      rc.reason = "enclosures cannot separate the cases within budget";
      return rc;
    }
  }
  // Heuristic threshold: attempt strong regularity only.
  LambdaOptions lo = opts;
  for (double step : {0.05, 0.15}) {
    double t = std::min(0.99, th.value.hi() + step);
    Bracket lam = lambda_bracket(I, Bracket(t), lo);
    if (lam.definitely_gt(1.0) && lam.finite()) {
      rc.verdict = Regularity::strongly_regular;
      rc.reason = "certified positive finite pressure above the estimated threshold";
      return rc;
    }
  }
  rc.verdict = Regularity::undetermined;
  rc.reason = "threshold exponent only estimated; no certified separation";
  return rc;
}

}  // namespace cflim
