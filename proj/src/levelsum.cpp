#include "cflim/levelsum.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <stdexcept>

namespace cflim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Directed accumulation in doubles: one nextafter step per add keeps the
// running endpoints outside the exact sum under IEEE round-to-nearest.
struct DirectedSum {
  double lo = 0.0, hi = 0.0;
  void add(double tlo, double thi) {
    lo = std::nextafter(lo + tlo, -kInf);
    hi = std::nextafter(hi + thi, kInf);
  }
  void merge(const DirectedSum& o) { add(o.lo, o.hi); }
};

// pow with a generous ulp pad; libm pow is a few ulps off at worst.
inline void pow_pad(double base, double e, double& lo, double& hi) {
  double v = std::pow(base, e);
  lo = v * (1.0 - 4e-15);
  hi = v * (1.0 + 4e-15);
}

// ---------------------------------------------------------------------------
// Exact enumeration path for small finite alphabets: one DFS accumulates
// every depth at once, parallel over the first digit.

struct FastAccum {
  std::vector<DirectedSum> sup, inf;
  explicit FastAccum(int depth) : sup(depth), inf(depth) {}
  void merge(const FastAccum& o) {
    for (std::size_t i = 0; i < sup.size(); ++i) {
      sup[i].merge(o.sup[i]);
      inf[i].merge(o.inf[i]);
    }
  }
};

void fast_dfs(const std::vector<std::uint64_t>& digits, int depth, int max_depth,
              std::uint64_t q, std::uint64_t q2, double m2t, FastAccum& acc) {
  for (std::uint64_t d : digits) {
    std::uint64_t qn = d * q + q2;
    double tlo, thi;
    pow_pad(static_cast<double>(qn), m2t, tlo, thi);
    acc.sup[depth].add(tlo, thi);
    pow_pad(static_cast<double>(qn + q), m2t, tlo, thi);
    acc.inf[depth].add(tlo, thi);
    if (depth + 1 < max_depth) fast_dfs(digits, depth + 1, max_depth, qn, q, m2t, acc);
  }
}

bool fast_path_applicable(const IndexSet& I, int max_depth, double fast_budget,
                          std::vector<std::uint64_t>& digits_out) {
  if (!I.is_finite()) return false;
  auto cnt = I.finite_count();
  if (!cnt || *cnt > 64) return false;
  auto mx = I.max_element();
  if (!mx || *mx > 1000000) return false;
  double leaves = std::pow(cnt->get_d(), max_depth);
  if (!(leaves <= fast_budget)) return false;
  // q <= prod (digit+1) must stay well inside 64 bits.
  double bits = max_depth * std::log2(mx->get_d() + 1.0);
  if (bits > 61.0) return false;
  digits_out.clear();
  I.for_each(*mx, [&](const mpz_class& e) {
    digits_out.push_back(e.get_ui());
    return true;
  });
  return true;
}

void run_fast_path(const std::vector<std::uint64_t>& digits, double t, int max_depth,
                   int workers, LevelSumTable& table) {
  double m2t = -2.0 * t;
  FastAccum total(max_depth);
  if (workers > 1 && digits.size() > 1) {
    std::vector<std::future<FastAccum>> futs;
    std::size_t chunks = std::min<std::size_t>(digits.size(), workers);
    for (std::size_t c = 0; c < chunks; ++c) {
      futs.push_back(std::async(std::launch::async, [&, c]() {
        FastAccum acc(max_depth);
        for (std::size_t i = c; i < digits.size(); i += chunks) {
          std::uint64_t d = digits[i];
          std::uint64_t qn = d;
          double tlo, thi;
          pow_pad(static_cast<double>(qn), m2t, tlo, thi);
          acc.sup[0].add(tlo, thi);
          pow_pad(static_cast<double>(qn + 1), m2t, tlo, thi);
          acc.inf[0].add(tlo, thi);
          if (max_depth > 1) fast_dfs(digits, 1, max_depth, qn, 1, m2t, acc);
        }
        return acc;
      }));
    }
    for (auto& f : futs) total.merge(f.get());
  } else {
    fast_dfs(digits, 0, max_depth, 1, 0, m2t, total);
  }
  for (int k = 0; k < max_depth; ++k) {
    table.sup_sums.emplace_back(std::max(total.sup[k].lo, 0.0), total.sup[k].hi);
    table.inf_sums.emplace_back(std::max(total.inf[k].lo, 0.0), total.inf[k].hi);
  }
}

// Singleton alphabets: one word per depth, exact continuants.
void run_singleton_path(const mpz_class& d, const Bracket& two_t, int max_depth,
                        LevelSumTable& table) {
  mpz_class q(1), q2(0);
  for (int k = 0; k < max_depth; ++k) {
    mpz_class qn = d * q + q2;
    q2 = q;
    q = qn;
    table.sup_sums.push_back(Bracket::neg_pow_mpz(q, two_t));
    table.inf_sums.push_back(Bracket::neg_pow_mpz(q + q2, two_t));
  }
}

// ---------------------------------------------------------------------------
// Adaptive-frontier path.  A node is a word prefix (exact continuants) plus
// a constraint range for the next letter; its subtree contribution is
// bracketed from the prefix derivative over the next-letter cylinder span,
// the range weight, and the already-computed shallower rows.

struct Node {
  mpz_class q, q2;
  int done = 0;
  mpz_class a;                  // next-letter range [a, b] (b empty = alphabet max)
  std::optional<mpz_class> b;
  Bracket contrib;
  double width = 0.0;
};

struct NodeCmp {
  bool operator()(const Node* x, const Node* y) const { return x->width < y->width; }
};

class FrontierRun {
 public:
  FrontierRun(const IndexSet& I, const Bracket& two_t, int x0,
              const std::vector<Bracket>& rows, const LevelSumOptions& opts, int k)
      : I_(I), two_t_(two_t), x0_(x0), rows_(rows), opts_(opts), k_(k) {
    rw_whole_ = I_.weight_sum(I_.min_element(), std::nullopt, Bracket(0.0, 1.0), two_t_);
  }

  // Certified subtree contribution of a node.
  Bracket bound(const Node& n) const {
    int r = k_ - n.done;
    Bracket qb = Bracket::from_mpz(n.q);
    Bracket q2b = Bracket::from_mpz(n.q2);
    if (r == 1) {
      Bracket shift = Bracket::from_int(x0_) + q2b / qb;
      Bracket w = I_.weight_sum(n.a, n.b, shift, two_t_);
      return pow(qb, neg(two_t_)) * w;
    }
    // y spans the cylinder images of the next letter range.
    Bracket y = y_span(n);
    Bracket pd = pow(q2b * y + qb, neg(two_t_));
    bool whole = whole_alphabet(n);
    Bracket rw = whole ? rw_whole_ : I_.weight_sum(n.a, n.b, Bracket(0.0, 1.0), two_t_);
    return pd * rw * rows_[r - 2];
  }

  bool whole_alphabet(const Node& n) const {
    if (n.a != I_.min_element()) return false;
    if (!n.b) return true;
    auto mx = I_.max_element();
    return mx && *n.b >= *mx;
  }

  Bracket y_span(const Node& n) const {
    Bracket lo = n.b ? recip(Bracket::from_mpz(*n.b + 1)) : Bracket(0.0);
    Bracket hi = recip(Bracket::from_mpz(n.a));
    return hull(lo, hi);
  }

  // Expand node into children (or emit exact leaf terms into `done`).
  void expand(const Node& n, std::vector<Node>& out, Bracket& done) {
    auto first = I_.next_element(n.a);
    if (!first || (n.b && *first > *n.b)) return;  // empty range
    bool single;
    {
      auto second = I_.next_element(*first + 1);
      single = !second || (n.b && *second > *n.b);
      if (!n.b && second) single = false;
    }
    if (single || (n.b && *n.b == *first)) {
      // Append the single letter.
      mpz_class qn = *first * n.q + n.q2;
      if (n.done + 1 == k_) {
        mpz_class v = x0_ ? mpz_class(qn + n.q) : qn;
        done += Bracket::neg_pow_mpz(v, two_t_);
        return;
      }
      Node c;
      c.q = qn;
      c.q2 = n.q;
      c.done = n.done + 1;
      c.a = I_.min_element();
      c.b = I_.max_element();
      finish(c, out);
      return;
    }
    // Split the range: peel the first letter, keep the rest.
    Node c1;
    c1.q = n.q;
    c1.q2 = n.q2;
    c1.done = n.done;
    c1.a = *first;
    c1.b = *first;
    finish(c1, out);
    mpz_class rest_lo = *first + 1;
    // Geometric interior split for wide ranges keeps the y-span tight.
    std::optional<mpz_class> rest_hi = n.b;
    if (!rest_hi || (*rest_hi > 4 * rest_lo && *rest_hi - rest_lo > 64)) {
      mpz_class mid = rest_hi ? mpz_class(sqrt(rest_lo * *rest_hi)) : mpz_class(rest_lo * 4);
      if (mid <= rest_lo) mid = rest_lo + 1;
      if (rest_hi && mid >= *rest_hi) mid = *rest_hi - 1;
      Node c2;
      c2.q = n.q;
      c2.q2 = n.q2;
      c2.done = n.done;
      c2.a = rest_lo;
      c2.b = mid;
      finish(c2, out);
      Node c3;
      c3.q = n.q;
      c3.q2 = n.q2;
      c3.done = n.done;
      c3.a = mid + 1;
      c3.b = rest_hi;
      finish(c3, out);
    } else {
      Node c2;
      c2.q = n.q;
      c2.q2 = n.q2;
      c2.done = n.done;
      c2.a = rest_lo;
      c2.b = rest_hi;
      finish(c2, out);
    }
  }

  void finish(Node& c, std::vector<Node>& out) {
    c.contrib = bound(c);
    c.width = c.contrib.width();
    out.push_back(std::move(c));
  }

  Bracket run(std::uint64_t budget, bool* exhausted) {
    Bracket done;
    std::priority_queue<Node*, std::vector<Node*>, NodeCmp> heap;
    std::vector<std::unique_ptr<Node>> pool;
    Bracket frontier_total;

    auto push = [&](Node&& n) {
      frontier_total += n.contrib;
      pool.push_back(std::make_unique<Node>(std::move(n)));
      heap.push(pool.back().get());
    };

    Node root;
    root.q = 1;
    root.q2 = 0;
    root.done = 0;
    root.a = I_.min_element();
    root.b = I_.max_element();
    root.contrib = bound(root);
    root.width = root.contrib.width();
    push(std::move(root));

    std::uint64_t steps = 0;
    std::vector<Node> children;
    while (!heap.empty()) {
      Bracket total = done + frontier_total;
      double w = total.width();
      double scale = std::max(std::abs(total.lo()), 1e-300);
      if (w <= opts_.rel_tol * scale) break;
      if (steps >= budget) {
        if (exhausted) *exhausted = true;
        break;
      }
      Node* top = heap.top();
      heap.pop();
      frontier_total = frontier_total - top->contrib;
      children.clear();
      expand(*top, children, done);
      for (auto& c : children) push(std::move(c));
      ++steps;
    }
    nodes_used = steps;
    Bracket total = done + frontier_total;
    return Bracket::span_nonneg(total, total);
  }

  std::uint64_t nodes_used = 0;

 private:
  const IndexSet& I_;
  Bracket two_t_;
  int x0_;
  const std::vector<Bracket>& rows_;
  const LevelSumOptions& opts_;
  int k_;
  Bracket rw_whole_;
};

void run_frontier_path(const IndexSet& I, const Bracket& two_t, const LevelSumOptions& opts,
                       LevelSumTable& table) {
  for (int x0 = 0; x0 <= 1; ++x0) {
    std::vector<Bracket>& rows = x0 ? table.inf_sums : table.sup_sums;
    for (int k = 1; k <= opts.max_depth; ++k) {
      FrontierRun fr(I, two_t, x0, rows, opts, k);
      bool exhausted = false;
      rows.push_back(fr.run(opts.node_budget, &exhausted));
      table.nodes += fr.nodes_used;
      if (exhausted) table.budget_exhausted = true;
    }
  }
}

}  // namespace

LevelSumTable compute_level_sums(const IndexSet& alphabet, const Bracket& t,
                                 const LevelSumOptions& opts) {
  LevelSumTable table;
  Bracket two_t = Bracket::from_int(2) * t;
  table.two_t = two_t;
  table.truncation = opts.truncate;
  if (opts.max_depth < 1) throw std::invalid_argument("level sums: depth >= 1 required");

  IndexSet I = opts.truncate ? IndexSet::truncate(alphabet, *opts.truncate) : alphabet;
  if (I.is_empty()) {
    for (int k = 0; k < opts.max_depth; ++k) {
      table.sup_sums.emplace_back();
      table.inf_sums.emplace_back();
    }
    return table;
  }

  auto cnt = I.finite_count();
  if (cnt && *cnt == 1) {
    run_singleton_path(I.min_element(), two_t, opts.max_depth, table);
    return table;
  }
  std::vector<std::uint64_t> digits;
  if (t.is_point() && fast_path_applicable(I, opts.max_depth, opts.fast_budget, digits)) {
    run_fast_path(digits, t.lo(), opts.max_depth, opts.workers, table);
    table.nodes = static_cast<std::uint64_t>(
        std::min<double>(9e18, std::pow(double(digits.size()), opts.max_depth)));
    return table;
  }
  run_frontier_path(I, two_t, opts, table);
  return table;
}

LevelSumResult level_sum(const IndexSet& alphabet, const Bracket& t, int depth,
                         const std::optional<mpz_class>& truncation,
                         const LevelSumOptions& opts_in) {
  LevelSumOptions opts = opts_in;
  opts.max_depth = depth;
  opts.truncate = truncation;
  LevelSumTable table = compute_level_sums(alphabet, t, opts);
  LevelSumResult res;
  res.truncated = table.sup_sums.at(depth - 1);
  res.certified = !table.budget_exhausted;
  res.full_upper = res.truncated;
  if (!alphabet.is_finite() && truncation) {
    // Untruncated upper bound: compound the level-1 tail multiplicatively,
    //   S_depth(I) <= (S_1(trunc) + tail_1)^depth,
    // with tail_1 = sum_{i > N, i in I} (2/(i+2))^(2t).
    Bracket tail1 = alphabet.tail_upper_increments(*truncation, table.two_t);
    Bracket s1 = table.sup_sums.at(0);
    Bracket compound = pow_si(s1 + tail1, depth);
    res.full_upper = Bracket::span_nonneg(res.truncated, compound);
  }
  return res;
}

}  // namespace cflim
