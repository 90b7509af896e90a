#pragma once

// Base sets D ⊆ Z^d, their window counts #D_N = #(D ∩ R_N) and
// #D(N) = #(D ∩ B_N), and the density diagnostics built on them.

#include "pertlab/lattice.hpp"
#include "pertlab/numeric.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace pertlab {

using Json = nlohmann::json;

/// Process-wide cap on the number of lattice points a single brute-force
/// enumeration may visit.
void set_point_budget(std::uint64_t points);
std::uint64_t point_budget();
/// Throws CapacityError if visiting `points` points would exceed the budget.
void require_budget(const BigInt& points, const std::string& what);

/// Counts of set points per residue class of Z^d / (modulus Z)^d.
struct ResidueHistogram {
  int dim = 1;
  std::int64_t modulus = 1;
  std::map<std::vector<std::int64_t>, BigInt> bins;

  void add(const LatticePoint& x, const BigInt& count = 1);
  void add_residue(std::vector<std::int64_t> residue, const BigInt& count);
  void merge(const ResidueHistogram& other);
  BigInt total() const;
  /// Marginal counts of one coordinate's residue.
  std::vector<BigInt> marginal(int coord) const;

  friend bool operator==(const ResidueHistogram&, const ResidueHistogram&) = default;
};

std::int64_t residue_of(std::int64_t value, std::int64_t modulus);

/// Arithmetic progression of shell indices first, first+step, ... (count terms).
struct ShellProgression {
  BigInt first = 0;
  BigInt step = 1;
  BigInt count = 0;

  BigInt at(const BigInt& i) const { return first + step * i; }
  BigInt last() const { return first + step * (count - 1); }
  /// Number of terms <= radius.
  BigInt terms_up_to(const BigInt& radius) const;

  friend bool operator==(const ShellProgression&, const ShellProgression&) = default;
};

/// The t-th point (0-based, lexicographic) of the face {x ∈ I_m : x_1 = +m}.
LatticePoint preferred_face_point(std::int64_t m, int dim, std::uint64_t t);
/// Size of that face, (2m+1)^{d-1}.
BigInt preferred_face_size(const BigInt& m, int dim);

/// A subset of Z^d with window counting. Implementations supply closed forms
/// where they exist and fall back to budgeted enumeration otherwise.
class LatticeSet {
 public:
  virtual ~LatticeSet() = default;

  virtual int dim() const = 0;
  virtual bool contains(const LatticePoint& x) const = 0;
  virtual BigInt count_in_cube(const BigInt& radius) const = 0;
  virtual BigInt count_in_ball(const BigInt& radius) const = 0;
  /// #(set ∩ I_n)
  virtual BigInt count_in_shell(const BigInt& index) const;
  /// Points of set ∩ R_N, lexicographically sorted.
  virtual std::vector<LatticePoint> points_in_cube(std::int64_t radius) const = 0;
  /// Points of set ∩ B_N, lexicographically sorted.
  virtual std::vector<LatticePoint> points_in_ball(std::int64_t radius) const;
  virtual ResidueHistogram residues_in_cube(const BigInt& radius, std::int64_t modulus) const;
  /// max over the points of set ∩ R_N of max_i |x_i| (0 when empty).
  virtual BigInt max_coordinate_in_cube(const BigInt& radius) const;

  /// True when next_fresh_minimum() is available in closed form.
  virtual bool closed_form_minima() const { return false; }
  /// Smallest m >= from, m <= cap, at which #set_m / #R_m is strictly below
  /// its value at every smaller radius >= 1. Only called when
  /// closed_form_minima() is true.
  virtual std::optional<BigInt> next_fresh_minimum(const BigInt& from, const BigInt& cap) const;

  /// Number of set points among the first `per_shell` lexicographic points of
  /// the face {x_1 = +m} of every shell m of the progression; nullopt when
  /// that cannot be decided within the point budget.
  virtual std::optional<BigInt> preferred_prefix_hits(const ShellProgression& shells,
                                                      const BigInt& per_shell) const;

  virtual Json to_json() const = 0;
  virtual std::string describe() const = 0;
};

using SetPtr = std::shared_ptr<const LatticeSet>;

/// A finite list of points.
class ExplicitSet final : public LatticeSet {
 public:
  ExplicitSet(int dim, std::vector<LatticePoint> points);

  int dim() const override { return dim_; }
  bool contains(const LatticePoint& x) const override;
  BigInt count_in_cube(const BigInt& radius) const override;
  BigInt count_in_ball(const BigInt& radius) const override;
  BigInt count_in_shell(const BigInt& index) const override;
  std::vector<LatticePoint> points_in_cube(std::int64_t radius) const override;
  ResidueHistogram residues_in_cube(const BigInt& radius, std::int64_t modulus) const override;
  BigInt max_coordinate_in_cube(const BigInt& radius) const override;
  std::optional<BigInt> preferred_prefix_hits(const ShellProgression& shells,
                                              const BigInt& per_shell) const override;
  Json to_json() const override;
  std::string describe() const override;

  const std::vector<LatticePoint>& points() const { return points_; }

 private:
  int dim_;
  std::vector<LatticePoint> points_;   // sorted, unique
  std::vector<std::uint64_t> linf_;    // sorted ℓ∞ norms
  std::vector<unsigned __int128> n2_;  // sorted squared Euclidean norms
};

/// The cubic ray {(j³, 0, ..., 0) : j >= 1}.
class CubicRaySet final : public LatticeSet {
 public:
  explicit CubicRaySet(int dim);

  int dim() const override { return dim_; }
  bool contains(const LatticePoint& x) const override;
  BigInt count_in_cube(const BigInt& radius) const override;
  BigInt count_in_ball(const BigInt& radius) const override;
  std::vector<LatticePoint> points_in_cube(std::int64_t radius) const override;
  ResidueHistogram residues_in_cube(const BigInt& radius, std::int64_t modulus) const override;
  BigInt max_coordinate_in_cube(const BigInt& radius) const override;
  bool closed_form_minima() const override { return true; }
  std::optional<BigInt> next_fresh_minimum(const BigInt& from, const BigInt& cap) const override;
  std::optional<BigInt> preferred_prefix_hits(const ShellProgression& shells,
                                              const BigInt& per_shell) const override;
  Json to_json() const override;
  std::string describe() const override;

 private:
  int dim_;
};

/// All of Z^d.
class FullLatticeSet final : public LatticeSet {
 public:
  explicit FullLatticeSet(int dim);

  int dim() const override { return dim_; }
  bool contains(const LatticePoint& x) const override;
  BigInt count_in_cube(const BigInt& radius) const override;
  BigInt count_in_ball(const BigInt& radius) const override;
  std::vector<LatticePoint> points_in_cube(std::int64_t radius) const override;
  BigInt max_coordinate_in_cube(const BigInt& radius) const override;
  bool closed_form_minima() const override { return true; }
  std::optional<BigInt> next_fresh_minimum(const BigInt& from, const BigInt& cap) const override;
  Json to_json() const override;
  std::string describe() const override;

 private:
  int dim_;
};

/// (stride Z)^d.
class SublatticeSet final : public LatticeSet {
 public:
  SublatticeSet(int dim, std::int64_t stride);

  int dim() const override { return dim_; }
  bool contains(const LatticePoint& x) const override;
  BigInt count_in_cube(const BigInt& radius) const override;
  BigInt count_in_ball(const BigInt& radius) const override;
  std::vector<LatticePoint> points_in_cube(std::int64_t radius) const override;
  Json to_json() const override;
  std::string describe() const override;

 private:
  int dim_;
  std::int64_t stride_;
};

/// Seeded random set with P(g ∈ D) = (1 + ‖g‖∞)^{-exponent}. Membership is
/// a pure function of (seed, g), so the set is the same for every query
/// order and thread count.
class RandomSet final : public LatticeSet {
 public:
  RandomSet(int dim, std::uint64_t seed, double exponent);

  int dim() const override { return dim_; }
  bool contains(const LatticePoint& x) const override;
  BigInt count_in_cube(const BigInt& radius) const override;
  BigInt count_in_ball(const BigInt& radius) const override;
  BigInt count_in_shell(const BigInt& index) const override;
  std::vector<LatticePoint> points_in_cube(std::int64_t radius) const override;
  Json to_json() const override;
  std::string describe() const override;

  double exponent() const { return exponent_; }

 private:
  int dim_;
  std::uint64_t seed_;
  double exponent_;
  mutable std::mutex cube_mutex_;
  mutable std::vector<std::uint64_t> cube_counts_;  // [n] = #(set ∩ R_n)
};

/// Builds a base set from its JSON description.
SetPtr parse_base_set(const Json& spec);

/// Cached cube and ball counts of one set. Entries never change once
/// computed; concurrent readers share the table.
class WindowCountTable {
 public:
  explicit WindowCountTable(SetPtr set);

  BigInt cube(const BigInt& radius) const;
  BigInt ball(const BigInt& radius) const;
  std::size_t size() const;
  const LatticeSet& set() const { return *set_; }

 private:
  SetPtr set_;
  mutable std::shared_mutex mutex_;
  mutable std::map<BigInt, BigInt> cube_;
  mutable std::map<BigInt, BigInt> ball_;
};

BigInt count_in_cube(const LatticeSet& set, const BigInt& radius);

struct DensityRow {
  BigInt radius;
  BigInt ball_count;  // #D(N)
  BigInt cube_count;  // #D_N
  Rational ball_ratio;  // #D(N) / #B_N
  Rational cube_ratio;  // #D_N / #R_N
};

/// #D(N)/#B_N and #D_N/#R_N for N = 1..max_radius.
std::vector<DensityRow> density_profile(const LatticeSet& set, std::int64_t max_radius);

/// #(S_N △ D_N) / #D_N. Throws DivisionByZeroError when D_N is empty.
Rational perturbation_ratio(const LatticeSet& s, const LatticeSet& d, const BigInt& radius);

struct BanachEstimate {
  Rational value;  // lower bound on sup_g #((g+D) ∩ B_N) / #B_N
  LatticePoint argmax;
  std::size_t translates = 0;
};

/// Maximum of #((g+D) ∩ B_N)/#B_N over the first `translates` grid
/// translates g ∈ N·Z^d, visited shell by shell around the origin.
BanachEstimate banach_density_estimate(const LatticeSet& set, std::int64_t radius,
                                       std::size_t translates);

struct ComparabilityRow {
  std::int64_t radius = 0;
  std::optional<Rational> ball_over_cube;  // #D(N)/#D_N
  std::optional<Rational> doubling;        // #D(2N)/#D(N)
};

struct ComparabilityReport {
  std::vector<ComparabilityRow> rows;
  std::optional<Rational> min_ball_over_cube;
  std::optional<Rational> max_ball_over_cube;
  std::optional<Rational> max_doubling;
  std::size_t zero_denominators = 0;
  bool pass = false;
};

/// Checks c < #D(N)/#D_N < C and #D(2N) < C'·#D(N) over N ∈ [lo, hi].
ComparabilityReport check_ball_cube_comparability(const LatticeSet& set, std::int64_t lo,
                                                  std::int64_t hi, const Rational& c,
                                                  const Rational& big_c, const Rational& c_prime);

}  // namespace pertlab
