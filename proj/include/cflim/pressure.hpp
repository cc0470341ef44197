#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cflim/bracket.hpp"
#include "cflim/indexset.hpp"
#include "cflim/levelsum.hpp"

namespace cflim {

struct LambdaOptions {
  int max_depth = 10;
  double rel_tol = 2e-3;
  std::uint64_t node_budget = 400000;
  double fast_budget = 4e8;
  std::optional<mpz_class> truncate;  // enumeration cutoff for infinite sets
  int workers = 1;
  bool allow_renewal = true;  // block-renewal route for huge-gap run sets
};

/// Certified enclosure of the growth factor lambda_t(I) = e^{P_I(t)}: the
/// limit of the depth-n weight-sum roots.  The lower end comes from the
/// supermultiplicative inf-derivative sums (which dominate the classical
/// 4^(-t)-corrected sup sums), the upper end from the submultiplicative sup
/// sums; for infinite alphabets both ends carry certified single-digit
/// increment tail corrections beyond the truncation.
Bracket lambda_bracket(const IndexSet& I, const Bracket& t, const LambdaOptions& opts = {});

/// Certified enclosure of the pressure P_I(t) = log lambda_t(I).
Bracket pressure_bracket(const IndexSet& I, const Bracket& t, const LambdaOptions& opts = {});

/// Certified window for the change of lambda_delta when one digit i >= 2 is
/// adjoined:  (1/(i+1))^(2 delta)  <=  increment  <=  (2/(i+2))^(2 delta).
std::pair<Bracket, Bracket> kz_increment_bounds(const mpz_class& i, const Bracket& delta);

struct DimensionOptions {
  double tol = 0.01;
  int initial_depth = 6;
  int max_depth = 14;
  std::uint64_t node_budget = 400000;
  double fast_budget = 4e8;
  std::optional<mpz_class> truncate;
  int workers = 1;
  int max_bisections = 200;
};

struct DimensionResult {
  Bracket dim;          // [t_lo, t_hi]
  bool certified = false;  // width <= tol reached
  int depth_used = 0;
  std::uint64_t evaluations = 0;
};

/// Certified Hausdorff-dimension bracket of the limit set of I via root
/// bracketing of the pressure: maintains t_lo with lambda enclosure above 1
/// (or t_lo = 0) and t_hi with lambda enclosure below 1, refining the level
/// depth whenever the enclosure at a midpoint straddles 1.
DimensionResult bowen_dimension(const IndexSet& I, const DimensionOptions& opts = {});

struct ThetaResult {
  Bracket value;
  bool exact = false;      // recognized family
  bool heuristic = false;  // slope-fit estimate
};

/// Finiteness threshold of the weight series: the exponent of convergence
/// of sum_{i in I} i^(-2t).  Exact for recognized families, else a flagged
/// slope-fit bracket.  Throws for opaque sets without counting support.
ThetaResult theta_exponent(const IndexSet& I);

enum class Regularity { regular, strongly_regular, cofinitely_regular, not_regular, undetermined };
std::string to_string(Regularity r);

struct RegularityClassification {
  Regularity verdict = Regularity::undetermined;
  std::string reason;
  Bracket theta;
};

/// Classifies the system of inverse branches over I: cofinitely regular iff
/// the weight series diverges at the threshold exponent; strongly regular
/// when some t has a certified positive finite pressure; finite alphabets
/// are always strongly regular.  Returns `undetermined` when enclosures
/// cannot separate the cases within budget.
RegularityClassification classify_regularity(const IndexSet& I, const LambdaOptions& opts = {});

}  // namespace cflim
