#pragma once

// Divergence witnesses: φ, the shifted copies φ_i, f = (1/d)Σφ_i, the
// pigeonhole choice of (H, j), and the certificate that the maximal averages
// of |f| over the sets S_{2n_k}, k ∈ A_u, stay above the threshold.
//
// φ_i(y) is nonzero when π_i(y_j) ≡ 0 (mod 2^u) on the witness coordinate j,
// with π_i(t) = t + shift_i. Such an f is periodic mod 2^u and depends on
// y_j only, so every average below is a function of x_j mod 2^u.

#include "pertlab/construction.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pertlab {

/// 2^{u/r} on points whose coordinates are all divisible by 2^u, else 0.
long double phi_eval(int u, Exponent r, const LatticePoint& x);

/// A function on Z^d with f(x) = values[x_coord mod modulus].
struct PeriodicFunction {
  int dim = 1;
  std::int64_t modulus = 1;
  int coord = 0;
  std::vector<long double> values;

  long double operator()(const LatticePoint& x) const {
    return values[static_cast<std::size_t>(residue_of(x[coord], modulus))];
  }
  static PeriodicFunction zero(int dim, std::int64_t modulus = 1);
};

struct PigeonholeResult {
  int j = 0;  // 0-based witness coordinate
  std::vector<BigInt> H;
  std::map<BigInt, int> j_of_k;
  std::map<BigInt, std::vector<BigInt>> counts;  // k -> #E_{k,j} for every j
};

/// #E_{k,j} = #{g ∈ E_k : g_j ≡ k (mod 2^u)} for every coordinate j.
std::vector<BigInt> coordinate_tallies(const AddedSet& e, int u);
PigeonholeResult pigeonhole_Hj(const ConstructionPlan& plan, int u);

class WitnessFunction {
 public:
  WitnessFunction(int u, Exponent r, int d, int j, std::vector<BigInt> H, std::vector<std::int64_t> shifts);

  int u() const { return u_; }
  Exponent r() const { return r_; }
  int dim() const { return d_; }
  int j() const { return j_; }
  const std::vector<BigInt>& H() const { return H_; }
  const std::vector<std::int64_t>& shifts() const { return shifts_; }
  std::int64_t modulus() const { return modulus_; }

  std::int64_t pi(int i, std::int64_t t) const;
  /// Masked φ_i(x).
  long double phi_i(int i, const LatticePoint& x) const;
  /// f(x) = (1/d) Σ_i φ_i(x).
  long double operator()(const LatticePoint& x) const;
  /// Index of the φ_i active at residue t of y_j, or -1.
  int active(std::int64_t t) const { return active_[static_cast<std::size_t>(t)]; }
  /// The nonzero value 2^{u/r}/d.
  long double level() const;
  const PeriodicFunction& periodic() const { return f_; }

  Json to_json() const;

 private:
  int u_;
  Exponent r_;
  int d_;
  int j_;
  std::vector<BigInt> H_;
  std::vector<std::int64_t> shifts_;
  std::int64_t modulus_;
  std::vector<int> active_;
  PeriodicFunction f_;
};

/// π_i(t) = t + i·⌈2^u/d⌉.
std::vector<std::int64_t> default_shifts(int u, int d);
WitnessFunction build_f(int u, Exponent r, int d, const std::vector<BigInt>& H, int j,
                        std::optional<std::vector<std::int64_t>> shifts = std::nullopt);

struct BudgetRow {
  std::int64_t L = 0;
  long double value = 0;
};

struct DensityBudget {
  std::vector<BudgetRow> rows;
  long double running_max = 0;
  long double measured_c = 0;  // max_L L·(value - 1)^+
  long double explicit_c = 0;  // (2^u - 1)/2 for the witness f
  bool within_explicit = false;

  Json to_json() const;
};

/// (1/(2L+1)^d) Σ_{x ∈ R_L} |f(x)|^exponent.
DensityBudget density_budget(const PeriodicFunction& f, Exponent exponent, const std::vector<std::int64_t>& L_list,
                             long double explicit_c = 0);
/// Same by enumerating R_L.
long double density_budget_enumerated(const PeriodicFunction& f, Exponent exponent, std::int64_t L);

struct ResidueCover {
  std::int64_t modulus = 1;
  std::int64_t L = 0;
  std::vector<std::vector<std::int64_t>> by_map;  // residues t of x_j in R_{L,i}
  std::vector<std::int64_t> present;               // residues occurring in [-L, L]
  std::vector<BigInt> sizes;                       // #R_{L,i}
  BigInt union_size;
};

/// R_{L,i} = {x ∈ R_L : π_i(x_j + h) = 0 for some h ∈ H}; throws "cover gap"
/// when their union misses part of R_L.
ResidueCover residue_cover(int u, const std::vector<BigInt>& H, int j, const std::vector<std::int64_t>& shifts,
                           std::int64_t L, int d);
/// The points of R_{L,i}, for small windows.
std::vector<LatticePoint> residue_cover_points(const ResidueCover& cover, int i, int j, int d);

struct ChainStep {
  BigInt k;
  std::int64_t residue = 0;  // of x_j
  long double average = 0;              // (1/#S_2n)Σ_{S_2n}|f(x+g)|
  long double e_average = 0;            // (1/(3^d #D_n))Σ_{E_k}|f(x+g)|
  long double ej_bound = 0;             // #E_{k,j}·level/(3^d #D_n)
  long double threshold = 0;
  bool first = false;   // average >= e_average
  bool second = false;  // e_average >= ej_bound
  bool third = false;   // ej_bound >= threshold
};

struct Certificate {
  Regime regime = Regime::T1;
  int u = 0;
  Exponent q{1, 1};
  std::optional<Exponent> p;
  int d = 1;
  int j = 0;
  std::vector<BigInt> H;
  std::int64_t audit_radius = 0;
  long double threshold = 0;         // with d²3^d
  long double threshold_strong = 0;  // with d·3^d
  long double min_max_average = 0;
  Rational pass_fraction;
  Rational strong_pass_fraction;
  LatticePoint worst_x;
  bool pass = false;
  bool strong_pass = false;
  std::vector<long double> max_average_by_residue;
  std::vector<BigInt> argmax_k_by_residue;
  std::vector<ChainStep> chain;
  bool chain_pass = false;
  std::size_t brute_force_points = 0;
  bool brute_force_agree = true;
  long double brute_force_max_error = 0;

  Json to_json() const;
};

/// Certifies max_{k ∈ A_u} (1/#S_{2n_k}) Σ_{g ∈ S_{2n_k}} |f(x+g)| above the
/// regime's threshold for every x ∈ R_L. Throws "divergence shortfall" when
/// some x fails.
Certificate certify_divergence(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f,
                               std::int64_t audit_radius, std::size_t brute_force_samples = 4);

/// The same evaluation without throwing on a shortfall.
Certificate evaluate_divergence(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f,
                                std::int64_t audit_radius, std::size_t brute_force_samples = 4);

/// The witness exponent: q under T1, p under T2.
Exponent witness_exponent(const ConstructionPlan& plan);

}  // namespace pertlab
