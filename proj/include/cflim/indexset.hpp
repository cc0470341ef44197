#pragma once

#include <gmpxx.h>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cflim/bracket.hpp"

namespace cflim {

/// Maximal run [lo, hi] of consecutive integers; hi is ignored when
/// unbounded is set (the run is [lo, infinity)).
struct Run {
  mpz_class lo, hi;
  bool unbounded = false;
};

/// A digit alphabet I, a subset of {1, 2, ...}.  Either an explicit union
/// of runs or a rule-based infinite set with an ordered enumerator, exact
/// counting, and certified tail-weight oracles.  Instances are immutable
/// and cheap to copy (shared representation).
class IndexSet {
 public:
  enum class Family { full, finite, geometric, i0, combined, liouville, custom };

  IndexSet();  // empty set

  static IndexSet full();
  static IndexSet from_elements(std::vector<mpz_class> elems);
  static IndexSet from_runs(std::vector<Run> runs, Family tag = Family::finite);
  /// {a, a^2, a^3, ...} for a >= 2.
  static IndexSet geometric(unsigned long a);
  /// All sums 1 + sum_{n in S} floor(2^(n/delta)) over finite S, n >= 1.
  /// Ordered enumeration, exact counting.  Requires 0 < delta < 1.
  static IndexSet i0(double delta);
  /// {mul*x + add : x in base}; mul >= 1, elements must stay >= 1.
  static IndexSet affine(const IndexSet& base, long mul, long add);
  /// Disjoint union.  Parts must be pairwise disjoint.
  static IndexSet union_of(std::vector<IndexSet> parts, Family tag, double param = 0.0);
  /// I with all elements <= cutoff removed.
  static IndexSet tail_above(const IndexSet& base, const mpz_class& cutoff);
  /// I restricted to [1, cutoff].
  static IndexSet truncate(const IndexSet& base, const mpz_class& cutoff);

  struct CustomOracles {
    // k-th element, 0-based, in increasing order; nullopt when exhausted.
    std::function<std::optional<mpz_class>(std::uint64_t)> element;
    // Optional exact #(I intersect [1, x]); enumeration fallback otherwise.
    std::function<mpz_class(const mpz_class&)> count_upto;
    // Optional certified tail sum_{i in I, i > K} (i+shift)^(-expo) upper
    // bound; the full-alphabet tail is used as a fallback upper bound.
    std::function<Bracket(const mpz_class&, const Bracket&, const Bracket&)> tail_upper;
    std::optional<double> theta_exact;  // known finiteness exponent, if any
  };
  static IndexSet custom(CustomOracles oracles, std::string label);

  Family family() const;
  double family_param() const;  // delta for i0/combined, a for geometric, else 0
  std::string describe() const;

  bool is_empty() const;
  bool is_finite() const;
  std::optional<mpz_class> finite_count() const;
  mpz_class min_element() const;                 // throws on empty set
  std::optional<mpz_class> max_element() const;  // finite sets only

  bool contains(const mpz_class& x) const;
  /// Exact #(I intersect [1, x]).
  mpz_class count_upto(const mpz_class& x) const;
  /// Smallest element >= x, if any.
  std::optional<mpz_class> next_element(const mpz_class& x) const;
  /// k-th element (0-based).
  std::optional<mpz_class> element_at(const mpz_class& k) const;

  /// Calls f on each element <= bound in increasing order; f returns false
  /// to stop early.
  void for_each(const mpz_class& bound, const std::function<bool(const mpz_class&)>& f) const;
  /// Calls f on each maximal run of consecutive elements, clipped to
  /// [1, bound], in increasing order.
  void for_each_run(const mpz_class& bound, const std::function<bool(const Run&)>& f) const;
  std::vector<mpz_class> first_n(std::size_t n) const;

  /// Certified enclosure of sum_{i in I, lo <= i (<= hi)} (i + shift)^(-expo)
  /// for shift >= 0 and expo > 0.  Unbounded upper range when hi is empty;
  /// the result may be [x, +inf] when the series diverges.
  Bracket weight_sum(const mpz_class& lo, const std::optional<mpz_class>& hi,
                     const Bracket& shift, const Bracket& expo) const;

  /// Double-interval weight sum for hot paths: same enclosure semantics,
  /// wider endpoints allowed.  hi < 0 means unbounded.  The shift interval
  /// is [shift_lo, shift_hi] with shift_lo > -lo.
  std::pair<double, double> weight_sum_d(std::int64_t lo, std::int64_t hi, double shift_lo,
                                         double shift_hi, double expo) const;

  /// Certified sum_{i in I, i > K} (1/(i+1))^e  (lower-increment tail).
  Bracket tail_lower_increments(const mpz_class& K, const Bracket& e) const;
  /// Certified sum_{i in I, i > K} (2/(i+2))^e  (upper-increment tail).
  Bracket tail_upper_increments(const mpz_class& K, const Bracket& e) const;

  /// The runs of an explicit finite set (throws otherwise).
  const std::vector<Run>& runs() const;

  /// Known exact finiteness exponent for recognized families.
  std::optional<double> theta_exact() const;

  class Impl;
  explicit IndexSet(std::shared_ptr<const Impl> impl);
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Parses "full", "3,7,19", or a family spec "geometric:2" / "i0:0.5".
IndexSet parse_index_set(const std::string& spec);

/// Loads an alphabet file: UTF-8 text, one positive integer per line,
/// ascending, '#' comments.
IndexSet load_index_set_file(const std::string& path);

}  // namespace cflim
