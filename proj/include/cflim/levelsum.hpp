#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cflim/bracket.hpp"
#include "cflim/indexset.hpp"

namespace cflim {

struct LevelSumOptions {
  int max_depth = 10;
  double rel_tol = 2e-3;            // per-row relative width target
  std::uint64_t node_budget = 400000;   // adaptive-frontier expansions per row
  double fast_budget = 4e8;         // full-enumeration budget (leaf count)
  std::optional<mpz_class> truncate;    // restrict the alphabet to [1, N]
  int workers = 1;
};

/// Certified per-depth weight sums over words of the alphabet.  Row k holds
///   sup_sums[k-1]  enclosing  Sum_{w in I^k} q(w)^(-2t)          and
///   inf_sums[k-1]  enclosing  Sum_{w in I^k} (q(w)+q'(w))^(-2t),
/// i.e. the sums of sup- and inf-derivative weights of the depth-k inverse
/// branches.  Both sequences pinch the same growth factor: inf sums are
/// supermultiplicative and sup sums submultiplicative.
struct LevelSumTable {
  Bracket two_t;
  std::vector<Bracket> sup_sums;
  std::vector<Bracket> inf_sums;
  std::optional<mpz_class> truncation;
  std::uint64_t nodes = 0;
  bool budget_exhausted = false;
};

LevelSumTable compute_level_sums(const IndexSet& alphabet, const Bracket& t,
                                 const LevelSumOptions& opts = {});

/// Single certified level sum Sum over (I cut to [1,N])^depth of
/// q^(-2t), plus (for infinite I) the multiplicatively compounded level-1
/// tail bound on the untruncated sum.
struct LevelSumResult {
  Bracket truncated;    // enclosure of the truncated sum
  Bracket full_upper;   // upper bound for the untruncated sum (hi may be inf)
  bool certified = true;
};
LevelSumResult level_sum(const IndexSet& alphabet, const Bracket& t, int depth,
                         const std::optional<mpz_class>& truncation,
                         const LevelSumOptions& opts = {});

}  // namespace cflim
