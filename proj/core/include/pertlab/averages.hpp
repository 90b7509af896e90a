#pragma once

// Discrete averages (1/#S_W) Σ_{g ∈ S_W} f(T_g x) over cube and ball
// windows, maximal averages over finite window lists, and a torus rotation
// as a concrete free Z^d-action.

#include "pertlab/witness.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pertlab {

enum class WindowKind { Cube, Ball };
std::string to_string(WindowKind k);

struct Window {
  WindowKind kind = WindowKind::Cube;
  std::int64_t radius = 0;
};

/// Rotation T_g x = x + (g_1 α_1, ..., g_d α_d) mod 1.
struct TorusAction {
  int dim = 1;
  std::vector<long double> alpha;

  /// α_i = frac(√p_i) over the first d primes.
  static TorusAction standard(int dim);
  std::vector<long double> apply(const std::vector<long double>& x, const LatticePoint& g) const;
};

/// h(g) = f(T_g x) for a fixed x; every average below is taken of such an h.
using Orbit = std::function<long double(const LatticePoint&)>;
using ExactOrbit = std::function<Rational(const LatticePoint&)>;
using LatticeFunction = std::function<long double(const LatticePoint&)>;
using TorusFunction = std::function<long double(const std::vector<long double>&)>;

Orbit lattice_orbit(LatticeFunction f, LatticePoint x);
Orbit torus_orbit(TorusFunction f, TorusAction action, std::vector<long double> x);

/// Pairwise summation in index order.
long double pairwise_sum(const std::vector<long double>& values);

/// Points of S in the window; throws DivisionByZeroError when it is empty.
std::vector<LatticePoint> window_points(const LatticeSet& s, const Window& w);

long double average_over(const LatticeSet& s, const Window& w, const Orbit& h);
Rational average_exact(const LatticeSet& s, const Window& w, const ExactOrbit& h);
/// max over Λ of the averages of |h|.
long double maximal_over(const LatticeSet& s, const std::vector<Window>& lambda, const Orbit& h);

/// Averages of a periodic f(x + ·) over R_N by residue counting; no size limit.
struct PeriodicAverages {
  std::int64_t modulus = 1;
  int coord = 0;
  std::vector<BigInt> radii;
  std::vector<BigInt> totals;                   // #S_N per radius
  std::vector<std::vector<BigInt>> hits;        // [radius][residue of x_coord]: #{g : f(x+g) != 0}
  std::vector<std::vector<long double>> sums;   // [radius][residue]: Σ |f(x+g)|

  long double average(std::size_t window, std::int64_t residue) const;
  long double maximal(std::int64_t residue) const;
};
PeriodicAverages periodic_averages(const LatticeSet& s, const PeriodicFunction& f, const std::vector<BigInt>& radii);

struct GoodnessRow {
  BigInt N;
  BigInt base_count;    // #D_N
  BigInt added_count;   // #(S_N \ D_N)
  long double main_term = 0;     // (1/#D_N) Σ_{D_N} h
  long double second_term = 0;   // (1/#D_N) Σ_{S_N \ D_N} h
  long double bound = 0;         // sup|h|·#(S_N \ D_N)/#D_N
  std::optional<long double> regime_bound;  // sup|h|·2(u/2^u)^{1/q} for the k with N ∈ [n_k, n_{k+1})
};

struct TailRow {
  BigInt k;
  long double value = 0;  // (1/#D_{n_k}) Σ_{S_{2n_k} \ D_{2n_k}} h
  bool evaluated = false;
};

struct GoodnessReport {
  std::vector<GoodnessRow> rows;
  std::vector<TailRow> tail;
  Json to_json() const;
};

/// Splits the S_N-sum of h into its D_N part and its added part.
GoodnessReport goodness_diagnostic(const PerturbedSet& s, const ConstructionPlan& plan, const Orbit& h,
                                   long double sup_abs, const std::vector<std::int64_t>& N_list);

struct BallCubeAverage {
  long double cube = 0;
  long double ball = 0;
  BigInt cube_count;
  BigInt ball_count;
  long double ratio = 0;  // ball/cube
};
BallCubeAverage ball_vs_cube_average(const LatticeSet& s, const Orbit& h, std::int64_t N);

struct TraceRow {
  BigInt index;  // k or N
  WindowKind window = WindowKind::Cube;
  BigInt count;
  long double average = 0;
  long double maximal = 0;  // running max along the trace
  std::optional<long double> threshold;
  bool pass = false;        // maximal > threshold
  std::string x;
};

struct AverageTrace {
  std::string mode;  // pointwise | lp_norm | maximal
  std::vector<TraceRow> rows;
};

/// One row per (x, k ∈ A_u): the S_{2n_k}-average of |f| at x.
AverageTrace divergence_trace(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f,
                              const std::vector<LatticePoint>& xs, long double threshold);

/// Tab-separated: k_or_N, window_kind, count, average, maximal, threshold, pass, x.
/// Rows without a threshold print NA in the last two numeric columns.
void write_trace_csv(std::ostream& out, const AverageTrace& trace);
/// Fixed-precision decimal text with '.' as the separator.
std::string format_real(long double v);

}  // namespace pertlab
