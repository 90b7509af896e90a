#pragma once

// Symbolic Rohlin tower complex: levels E_i indexed by R_t with equal mass,
// an error set E_r, the trimmed core R_{t,δ} = {i : |i_m| <= t - δ for all m},
// lifted functions f̄, Orlicz rescaling and the exceedance masses of the
// maximal averages.

#include "pertlab/averages.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pertlab {

struct OrliczGauge {
  std::string name;
  std::function<long double(long double)> phi;
  std::optional<Exponent> power;  // Φ(t) = t^power

  static OrliczGauge power_gauge(Exponent q);
  long double operator()(long double t) const { return phi(t); }
  /// Φ(0) = 0 and Φ nondecreasing on the grid.
  bool valid_on(const std::vector<long double>& grid) const;
};

/// ((2t+1)^d - (2t+1-2δ)^d)/(2t+1)^d, the share of levels outside the core.
Rational trim_fraction(const BigInt& t, int d, const BigInt& delta);
/// Smallest t >= δ with trim_fraction < ε.
BigInt minimal_tower_radius(int d, const BigInt& delta, const Rational& epsilon);
/// δ = max |n_i| over the points of S in the windows R_N.
BigInt window_delta(const LatticeSet& s, const std::vector<BigInt>& radii);

struct TowerComplex {
  BigInt t;
  int d = 1;
  BigInt delta;
  Rational epsilon;     // bound on both the error mass and the trim fraction
  Rational error_mass;  // ε/2
  BigInt level_count;   // (2t+1)^d
  Rational level_mass;  // (1 - error_mass)/(2t+1)^d
  BigInt core_radius;   // t - δ
  BigInt core_count;
  Rational trim;

  Rational total_mass() const { return level_mass * level_count + error_mass; }
  bool in_core(const LatticePoint& i) const;
  bool is_level(const LatticePoint& i) const;
  Json to_json() const;
};

/// Throws DomainError("t too small ...") naming the minimal admissible t.
TowerComplex build_tower(const BigInt& t, int d, const Rational& epsilon, const BigInt& delta);

enum class LiftSupport { Core, AllLevels };

/// f̄ = Σ_i f(i) 1_{E_i} over the core or over every level; 0 on E_r.
struct TowerFunction {
  TowerComplex tower;
  LatticeFunction f;
  std::optional<PeriodicFunction> periodic;  // enables counting by residues
  LiftSupport support = LiftSupport::AllLevels;

  /// f̄ on E_i; 0 off the support.
  long double on_level(const LatticePoint& i) const;
  long double on_error() const { return 0; }
  BigInt support_radius() const { return support == LiftSupport::Core ? tower.core_radius : tower.t; }
};

TowerFunction lift_function(const TowerComplex& tower, LatticeFunction f, LiftSupport support = LiftSupport::AllLevels);
TowerFunction lift_function(const TowerComplex& tower, const PeriodicFunction& f,
                            LiftSupport support = LiftSupport::AllLevels);

/// ∫Φ(|f̄|/scale) dm.
long double orlicz_integral(const TowerFunction& fbar, const OrliczGauge& phi, long double scale = 1);
/// (1/#R_t) Σ_{i ∈ R_t} Φ(|f(i)|).
long double level_average(const TowerFunction& fbar, const OrliczGauge& phi);
/// The period mean of Φ(|f|), which is the density D(Φ(f)) of a periodic f.
long double periodic_density(const PeriodicFunction& f, const OrliczGauge& phi);

struct BudgetChain {
  long double integral = 0;        // ∫Φ(f̄) dm
  long double error_part = 0;      // ∫_{E_r} Φ(f̄) dm
  long double level_bound = 0;     // mE·Σ_{R_t} Φ(f(i))
  long double window_average = 0;  // (1 - ε)/#R_t Σ_{R_t} Φ(f(i))
  long double density = 0;         // D(Φ(f))
  bool error_excluded = false;
  bool below_levels = false;
  bool below_density = false;
  bool density_at_most_one = false;
  bool at_most_one = false;

  bool pass() const { return error_excluded && below_levels && below_density && density_at_most_one && at_most_one; }
  Json to_json() const;
};

BudgetChain budget_chain(const TowerFunction& fbar, const OrliczGauge& phi, long double density,
                         const Rational& epsilon_target);

struct Exceedance {
  BigInt qualifying;          // #{i ∈ core : max average >= K}
  BigInt qualifying_levels;   // #{j ∈ R_t : max average >= K}
  Rational lattice_fraction;  // qualifying_levels/#R_t
  Rational mass;              // qualifying·mE
  Rational bound;             // (1 - 2ε)(1 - ε_tower)
  bool hypothesis = false;    // lattice_fraction >= 1 - ε
  bool pass = false;          // mass >= bound

  Json to_json() const;
};

/// Exceedance from per-residue flags of x_coord mod modulus.
Exceedance exceedance_from_residues(const TowerComplex& tower, std::int64_t modulus, const std::vector<bool>& qualifies,
                                    const Rational& epsilon_target);
/// Residue r qualifies when max over the windows of the averages is >= K.
/// Throws Error("transference shortfall ...") when the mass misses the bound.
Exceedance exceedance_measure(const TowerComplex& tower, const PeriodicAverages& table, long double K,
                              const Rational& epsilon_target, bool throw_on_shortfall = true);

/// Mass of {x ∈ core levels : max over Λ of (1/#S_N) Σ_{n ∈ S_N} f̄(T_n x) >= K},
/// evaluated level by level with f̄ itself. For small towers.
Rational exceedance_by_levels(const TowerFunction& fbar, const LatticeSet& s, const std::vector<Window>& lambda,
                              long double K);

struct OrliczScale {
  int alpha = 0;
  long double M = 1;
  int grid_index = 0;  // M = 2^{grid_index/steps}
  int steps = 8;
  long double integral = 0;  // ∫Φ(|f̄|/M)
  std::optional<long double> closed_form;      // 2^{α/q} for Φ(t) = t^q
  std::optional<long double> minimal_closed;   // (2^α ∫|f̄|^q)^{1/q}
  bool closed_form_within_budget = true;
  bool agrees_within_step = true;
};

/// Smallest M = 2^{i/steps}, i >= 0, with ∫Φ(|f̄|/M) <= 2^{-α}.
OrliczScale orlicz_scale(const TowerFunction& fbar, const OrliczGauge& phi, int alpha, int steps = 8,
                         int max_doublings = 512);

/// A certified witness: f, the averages of |f| over the windows Λ and δ.
struct WitnessLevel {
  int u = 0;
  PeriodicFunction f;
  PeriodicAverages table;
  BigInt delta;
};

WitnessLevel witness_level(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f);

struct TransferRow {
  BigInt t;
  std::optional<int> alpha;
  std::optional<int> u;
  Rational epsilon;
  Rational epsilon_tower;
  BigInt delta;
  Rational trim_fraction;
  long double orlicz_integral = 0;
  long double M = 1;
  long double K = 0;
  Rational exceedance_mass;
  Rational bound;
  bool identity = false;  // mass == qualifying·mE, rechecked from the residue tallies
  bool budget = false;
  std::string status;     // pass | fail | unreached
  bool pass = false;

  Json to_json() const;
};

/// One tower at radius t for the witness with threshold K.
TransferRow transfer_at(const WitnessLevel& w, const OrliczGauge& phi, long double K, const Rational& epsilon_target,
                        const std::optional<BigInt>& t);

struct SynthesisReport {
  std::vector<TransferRow> rows;  // one per α
  long double budget_sum = 0;     // Σ_α ∫Φ(ḡ_α)
  bool budget_ok = false;
  bool masses_nondecreasing = false;
  bool pass = false;  // no α failed

  Json to_json() const;
};

/// ε = 1/(3α), K = α·M_α and ḡ_α = |f̄|/M_α for each α, using the first witness
/// whose averages reach K on every residue.
SynthesisReport synthesize_g(const std::vector<WitnessLevel>& levels, const OrliczGauge& phi, int alpha_min,
                             int alpha_max, const std::optional<BigInt>& t = std::nullopt);

}  // namespace pertlab
