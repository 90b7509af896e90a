#pragma once

// The perturbation construction: running density minima m_j, block radii
// n_k, the added sets E_k placed on admissible shells, and the perturbed set
// S = D ∪ (∪_k E_k), together with an independent verifier of every
// condition the plan must satisfy.

#include "pertlab/sparse_set.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pertlab {

enum class Regime { T1, T2 };

std::string to_string(Regime r);
Regime parse_regime(const std::string& text);

/// A_u = {2^u, ..., 2^{u+1}-1}.
struct UBlock {
  int u = 1;

  BigInt first() const { return pow2(static_cast<std::uint64_t>(u)); }
  BigInt last() const { return pow2(static_cast<std::uint64_t>(u) + 1) - 1; }
  BigInt size() const { return first(); }
  bool contains(const BigInt& k) const { return k >= first() && k <= last(); }
};

/// The u with k ∈ A_u (k >= 2).
int block_of(const BigInt& k);

/// Quota factor (num/den)^{1/q}: u/2^u under T1, 1/(u²2^u) under T2.
struct RootFactor {
  BigInt num;
  BigInt den;
};
RootFactor quota_factor(Regime regime, int u);
/// The factor used on the right side of the selection condition on prefix
/// sums; u/2^u in both regimes.
RootFactor perturbation_factor(int u);

/// ⌈(num/den)^{1/q}·#D_{n_k}⌉.
BigInt quota_for(Regime regime, int u, Exponent q, const BigInt& base_count);

struct ConstructionConfig {
  Regime regime = Regime::T1;
  Exponent q{1, 1};
  std::optional<Exponent> p;
  int d = 1;
  int u_min = 2;
  int u_max = 3;
  SetPtr base;
  BigInt radius_cap = pow_big(10, 100);
  std::uint64_t materialize_cap = 2'000'000;
};

/// Fresh running minima of #D_m/#R_m, from closed forms when the set has
/// them and otherwise from a memoized scan starting at m = 1.
class RunningMinima {
 public:
  explicit RunningMinima(SetPtr set);

  /// Smallest fresh minimum m with from <= m <= cap.
  std::optional<BigInt> next(const BigInt& from, const BigInt& cap);
  std::uint64_t scanned() const { return scanned_; }

 private:
  SetPtr set_;
  BigInt last_ = 0;  // radii 1..last_ have been scanned
  std::optional<BigInt> best_cube_;
  BigInt best_count_ = 0;
  std::vector<BigInt> found_;
  std::uint64_t scanned_ = 0;
};

/// The first `count` fresh minima m <= cap.
std::vector<BigInt> select_mj(SetPtr base, std::size_t count, const BigInt& cap);

struct SkipEvent {
  BigInt k;
  std::string condition;
  BigInt from;  // rejected candidate m
  BigInt to;    // next radius the search resumed from
};

struct NkChoice {
  BigInt k;
  int u = 0;
  BigInt m;
  BigInt n;
  BigInt base_n;   // #D_{n_k}
  BigInt base_2n;  // #D_{2n_k}
  BigInt quota;
};

struct NkSelection {
  std::vector<NkChoice> choices;
  std::vector<SkipEvent> skips;
  std::uint64_t candidates = 0;
};

/// Greedy smallest-first choice of n_k = ⌊m_j/2⌋ over all k ∈ A_u,
/// u_min <= u <= u_max.
NkSelection select_nk(const ConstructionConfig& config);
/// Same, drawing candidates m from an explicit increasing list.
NkSelection select_nk(const ConstructionConfig& config, const std::vector<BigInt>& m_seq);

/// Throws DomainError for inconsistent exponents, dimensions or blocks.
void validate_config(const ConstructionConfig& config);

/// {m ∈ [n_k, 2n_k] : m ≡ k (mod 2^u)} as a progression.
ShellProgression admissible_shells(const BigInt& k, int u, const BigInt& n_k);

/// E_k. Either the points are listed or, with prefix_rule, shell i of the
/// progression carries the first c(i) = ⌊Q/s⌋ + [i < Q mod s] lexicographic points of its face
/// {x_1 = +m}, all inside the first row of that face and all outside D.
struct AddedSet {
  BigInt k;
  int u = 0;
  int dim = 1;
  ShellProgression shells;
  BigInt quota;
  std::vector<LatticePoint> points;  // construction order
  bool prefix_rule = false;          // points are implied, not listed

  bool symbolic() const { return prefix_rule; }
  /// c(i) for the prefix rule.
  BigInt allocation(const BigInt& shell_index) const;
  /// Σ_{i<t} c(i).
  BigInt allocated_in_first(const BigInt& shells_taken) const;

  bool contains(const LatticePoint& x) const;
  BigInt count_in_cube(const BigInt& radius) const;
  BigInt count_in_ball(const BigInt& radius) const;
  void add_residues(ResidueHistogram& hist, const BigInt& radius) const;
  /// Points inside R_radius; throws CapacityError above the point budget.
  std::vector<LatticePoint> points_in_cube(const BigInt& radius) const;

  Json to_json() const;
  static AddedSet from_json(const Json& j, int dim);

 private:
  std::vector<LatticePoint> sorted_;
  std::vector<std::uint64_t> linf_;
  friend AddedSet build_Ek(const LatticeSet&, const BigInt&, int, const BigInt&, const BigInt&,
                           std::uint64_t);
  friend class PerturbedSet;
  void index();
};

/// Chooses `quota` points of the admissible shells outside `base`:
/// round-robin over the shells, smallest first, taking preferred face points
/// {x_1 = +m} in lexicographic order before the rest of each shell.
AddedSet build_Ek(const LatticeSet& base, const BigInt& k, int u, const BigInt& n_k, const BigInt& quota,
                  std::uint64_t materialize_cap);

struct PlanRecord {
  NkChoice choice;
  AddedSet added;
};

struct ConstructionPlan {
  Regime regime = Regime::T1;
  Exponent q{1, 1};
  std::optional<Exponent> p;
  int d = 1;
  int u_min = 2;
  int u_max = 3;
  SetPtr base;
  std::vector<PlanRecord> records;
  std::vector<SkipEvent> skips;
  std::uint64_t candidates = 0;

  const PlanRecord* find(const BigInt& k) const;
  std::vector<const PlanRecord*> block(int u) const;

  Json to_json() const;
  static ConstructionPlan from_json(const Json& j);
};

ConstructionPlan build_plan(const ConstructionConfig& config);

/// S = D ∪ (∪_k E_k).
class PerturbedSet final : public LatticeSet {
 public:
  PerturbedSet(SetPtr base, std::vector<AddedSet> added);

  int dim() const override { return base_->dim(); }
  bool contains(const LatticePoint& x) const override;
  BigInt count_in_cube(const BigInt& radius) const override;
  BigInt count_in_ball(const BigInt& radius) const override;
  std::vector<LatticePoint> points_in_cube(std::int64_t radius) const override;
  ResidueHistogram residues_in_cube(const BigInt& radius, std::int64_t modulus) const override;
  BigInt max_coordinate_in_cube(const BigInt& radius) const override;
  Json to_json() const override;
  std::string describe() const override;

  const LatticeSet& base() const { return *base_; }
  SetPtr base_ptr() const { return base_; }
  const std::vector<AddedSet>& added() const { return added_; }
  /// #(S_N \ D_N) = Σ_k #(E_k ∩ R_N).
  BigInt added_in_cube(const BigInt& radius) const;

 private:
  SetPtr base_;
  std::vector<AddedSet> added_;
};

std::shared_ptr<const PerturbedSet> assemble_S(const ConstructionPlan& plan);

/// Counting route when d is the base of s; otherwise the generic one.
Rational perturbation_ratio(const PerturbedSet& s, const LatticeSet& d, const BigInt& radius);

/// Parses any set description, including kind "perturbed".
SetPtr parse_set(const Json& spec);

struct PerturbationSup {
  BigInt k;
  int u = 0;
  BigInt lo;
  BigInt hi;  // inclusive
  Rational sup;
  BigInt argmax;
  long double bound = 0;  // 2(num/den)^{1/q}, the regime's quota factor
  bool within_bound = false;  // decided exactly
  std::uint64_t nodes = 0;
};

/// sup of #(S_N \ D_N)/#D_N over N ∈ [n_k, n_{k+1}) for every k of the plan
/// (over [n_k, 2n_k] for the last k), computed exactly by branch and bound on
/// the two monotone step functions.
std::vector<PerturbationSup> perturbation_sups(const ConstructionPlan& plan, const PerturbedSet& s);

struct CheckResult {
  std::string name;
  std::optional<BigInt> k;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::vector<PerturbationSup> sups;
  std::map<int, Rational> sup_by_u;
  bool monotone_decreasing = false;
  bool pass = false;

  Json to_json() const;
};

/// Recomputes every condition of the plan from raw window counts, by
/// enumeration wherever the point budget allows.
VerifyReport verify_plan(const ConstructionPlan& plan);

struct SeriesBound {
  Regime regime = Regime::T1;
  bool divergent = false;
  std::vector<long double> terms;         // u = 1..u_max
  std::vector<long double> partial_sums;  // u = 1..u_max
  std::optional<long double> tail_bound;  // rigorous bound on Σ_{u>u_max}
  std::optional<long double> tail_estimate;
  std::optional<long double> limit_estimate;  // partial + tail estimate

  Json to_json() const;
};

/// Partial sums of Σ_u 3^{dp} u^{p/q} 2^{-u(p/q-1)} (T1) or Σ_u 3^{dq}/u² (T2).
SeriesBound lp_series_bound(Regime regime, Exponent q, std::optional<Exponent> p, int d, int u_max);

}  // namespace pertlab
