#pragma once

#include <optional>
#include <vector>

#include "cflim/bracket.hpp"
#include "cflim/indexset.hpp"
#include "cflim/levelsum.hpp"

namespace cflim {

/// An alphabet presented as a small base set plus layered runs of
/// consecutive digits, each layer starting far above everything below it.
/// Words factor into base blocks separated by layer letters; the exact
/// continuant splitting identities
///   q(uv) = q(u) q(v) (1 + [q(u-)/q(u)] [p(v)/q(v)]),   p(v)/q(v) <= 1/v_0,
/// bound every word weight between the product of its block weights (upper)
/// and that product times (1 + 1/min(layer))^(-4t) per layer letter
/// (lower).  Summing over words turns the depth-indexed weight sums into a
/// geometric series in the layer weight, so the growth factor is bracketed
/// by roots of one scalar equation per layer.
struct GapLayer {
  std::vector<Run> runs;  // bounded runs, sorted; min(runs) is the layer floor
  const mpz_class& min() const { return runs.front().lo; }
  const mpz_class& max() const { return runs.back().hi; }
};

struct GapAlphabet {
  IndexSet base;  // everything below the first layer (may be empty)
  std::vector<GapLayer> layers;
};

/// Splits an explicit runs-set into base + layers at gaps where a run
/// starts at least `gap_factor` times (and absolutely 2^20 above) the
/// largest digit below it.  Returns nullopt when no usable layer exists.
std::optional<GapAlphabet> decompose_gap_alphabet(const IndexSet& I, double gap_factor = 1e6);

struct RenewalOptions {
  int base_depth = 48;       // level-sum depth for the base ingredient
  double base_rel_tol = 1e-9;
  std::uint64_t base_node_budget = 1u << 22;
  int bisection_steps = 160;
  int workers = 1;
};

class RenewalEvaluator {
 public:
  RenewalEvaluator(GapAlphabet ga, const Bracket& t, const RenewalOptions& opts = {});

  /// Certified enclosure of the growth factor of the full gap alphabet.
  Bracket lambda_bracket() const;

  /// Growth factor with the top layer's run end replaced by `hi`
  /// (used to search the run end during constructions).
  Bracket lambda_with_top_end(const mpz_class& hi) const;

 private:
  struct Eval {
    Bracket value;
    bool divergent = false;  // certified divergence at this z
    bool usable = false;     // certified convergence for the upper route
  };
  // Enclosure of F_J(z) = sum_l S_l(J) z^l for the alphabet up to layer
  // `levels` (0 = base only), with the top layer end overridden if given.
  Eval F_lo(int levels, const Bracket& z, const std::optional<mpz_class>& top_hi) const;
  Eval F_hi(int levels, const Bracket& z, const std::optional<mpz_class>& top_hi) const;
  Bracket layer_weight(int idx, const std::optional<mpz_class>& top_hi, bool lower) const;
  Bracket lambda_impl(const std::optional<mpz_class>& top_hi) const;

  GapAlphabet ga_;
  Bracket t_, two_t_;
  RenewalOptions opts_;
  // Base ingredients.
  std::vector<Bracket> base_sup_;  // S_l(base), l = 1..L
  std::vector<Bracket> base_inf_;
  Bracket base_lambda_;            // growth factor of the base alphabet
  Bracket distortion_pow_;         // 4^t
};

}  // namespace cflim
