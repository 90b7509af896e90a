#include "pertlab/transference.hpp"

#include <cmath>
#include <sstream>

namespace pertlab {

namespace {

long double real(const Rational& r) { return static_cast<long double>(to_double(r)); }

std::string rational_text(const Rational& r) { return to_string(r); }

void check_epsilon(const Rational& e) {
  if (e <= 0 || e >= 1) throw DomainError("epsilon must lie in (0, 1)");
}

// #{i ∈ R_c : i_1 ≡ r (mod m)}, the same for every coordinate.
BigInt residue_count(const BigInt& c, int d, std::int64_t r, std::int64_t m) {
  return count_congruent(-c, c, r, m) * pow_big(2 * c + 1, static_cast<std::uint64_t>(d - 1));
}

}  // namespace

OrliczGauge OrliczGauge::power_gauge(Exponent q) {
  OrliczGauge g;
  g.name = "t^" + q.to_string();
  const long double e = q.value();
  g.phi = [e](long double t) { return t <= 0 ? 0.0L : std::pow(t, e); };
  g.power = q;
  return g;
}

bool OrliczGauge::valid_on(const std::vector<long double>& grid) const {
  if (phi(0) != 0) return false;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] >= grid[i - 1] && phi(grid[i]) < phi(grid[i - 1])) return false;
  return true;
}

Rational trim_fraction(const BigInt& t, int d, const BigInt& delta) {
  validate_dim(d);
  if (delta < 0) throw DomainError("delta must be nonnegative");
  if (t < delta) throw DomainError("tower radius t must be at least delta");
  const BigInt side = 2 * t + 1;
  const BigInt all = pow_big(side, static_cast<std::uint64_t>(d));
  const BigInt core = pow_big(side - 2 * delta, static_cast<std::uint64_t>(d));
  return Rational(all - core, all);
}

BigInt minimal_tower_radius(int d, const BigInt& delta, const Rational& epsilon) {
  check_epsilon(epsilon);
  if (delta == 0) return 0;
  BigInt lo = delta, hi = delta;
  while (!(trim_fraction(hi, d, delta) < epsilon)) {
    lo = hi + 1;
    hi *= 2;
  }
  while (lo < hi) {
    BigInt mid = (lo + hi) / 2;
    if (trim_fraction(mid, d, delta) < epsilon) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

BigInt window_delta(const LatticeSet& s, const std::vector<BigInt>& radii) {
  BigInt best = 0;
  for (const auto& r : radii) best = std::max(best, s.max_coordinate_in_cube(r));
  return best;
}

bool TowerComplex::is_level(const LatticePoint& i) const {
  for (auto c : i.coords())
    if (BigInt(c < 0 ? -c : c) > t) return false;
  return true;
}

bool TowerComplex::in_core(const LatticePoint& i) const {
  for (auto c : i.coords())
    if (BigInt(c < 0 ? -c : c) > core_radius) return false;
  return true;
}

Json TowerComplex::to_json() const {
  return Json{{"t", to_string(t)},
              {"d", d},
              {"delta", to_string(delta)},
              {"epsilon", rational_text(epsilon)},
              {"error_mass", rational_text(error_mass)},
              {"level_count", to_string(level_count)},
              {"level_mass", rational_text(level_mass)},
              {"core_radius", to_string(core_radius)},
              {"core_count", to_string(core_count)},
              {"trim_fraction", rational_text(trim)},
              {"total_mass", rational_text(total_mass())}};
}

TowerComplex build_tower(const BigInt& t, int d, const Rational& epsilon, const BigInt& delta) {
  check_epsilon(epsilon);
  if (t < 0) throw DomainError("tower radius must be nonnegative");
  const BigInt need = minimal_tower_radius(d, delta, epsilon);
  if (t < need) throw DomainError("t too small: minimal admissible t is " + to_string(need));
  TowerComplex tw;
  tw.t = t;
  tw.d = d;
  tw.delta = delta;
  tw.epsilon = epsilon;
  tw.error_mass = epsilon / 2;
  tw.level_count = cube_count_big(t, d);
  tw.level_mass = (1 - tw.error_mass) / Rational(tw.level_count);
  tw.core_radius = t - delta;
  tw.core_count = cube_count_big(tw.core_radius, d);
  tw.trim = trim_fraction(t, d, delta);
  return tw;
}

long double TowerFunction::on_level(const LatticePoint& i) const {
  if (!tower.is_level(i)) return 0;
  if (support == LiftSupport::Core && !tower.in_core(i)) return 0;
  return f(i);
}

TowerFunction lift_function(const TowerComplex& tower, LatticeFunction f, LiftSupport support) {
  return TowerFunction{tower, std::move(f), std::nullopt, support};
}

TowerFunction lift_function(const TowerComplex& tower, const PeriodicFunction& f, LiftSupport support) {
  if (f.dim != tower.d) throw DomainError("function and tower dimensions differ");
  return TowerFunction{tower, [f](const LatticePoint& x) { return f(x); }, f, support};
}

namespace {

// Σ_{i ∈ R_radius} Φ(|f(i)|/scale) as a fraction of (2t+1)^d.
long double share_sum(const TowerFunction& fb, const OrliczGauge& phi, const BigInt& radius, long double scale) {
  const int d = fb.tower.d;
  if (fb.periodic) {
    const auto& p = *fb.periodic;
    long double total = 0;
    for (std::int64_t r = 0; r < p.modulus; ++r) {
      const long double v = phi(std::fabs(p.values[static_cast<std::size_t>(r)]) / scale);
      if (v == 0) continue;
      total += v * real(Rational(residue_count(radius, d, r, p.modulus), fb.tower.level_count));
    }
    return total;
  }
  require_budget(cube_count_big(radius, d), "summing over tower levels");
  long double total = 0;
  for_each_cube_point(to_int64(radius), d, [&](const LatticePoint& i) { total += phi(std::fabs(fb.f(i)) / scale); });
  return total / real(Rational(fb.tower.level_count));
}

}  // namespace

long double orlicz_integral(const TowerFunction& fbar, const OrliczGauge& phi, long double scale) {
  if (!(scale > 0)) throw DomainError("Orlicz scale must be positive");
  return share_sum(fbar, phi, fbar.support_radius(), scale) * real(1 - fbar.tower.error_mass);
}

long double level_average(const TowerFunction& fbar, const OrliczGauge& phi) {
  return share_sum(fbar, phi, fbar.tower.t, 1);
}

long double periodic_density(const PeriodicFunction& f, const OrliczGauge& phi) {
  long double s = 0;
  for (auto v : f.values) s += phi(std::fabs(v));
  return s / static_cast<long double>(f.modulus);
}

BudgetChain budget_chain(const TowerFunction& fbar, const OrliczGauge& phi, long double density,
                         const Rational& epsilon_target) {
  constexpr long double slack = 1e-15L;
  BudgetChain c;
  c.integral = orlicz_integral(fbar, phi);
  c.error_part = phi(fbar.on_error()) * real(fbar.tower.error_mass);
  const long double avg = level_average(fbar, phi);
  c.level_bound = real(1 - fbar.tower.error_mass) * avg;
  c.window_average = real(1 - epsilon_target) * avg;
  c.density = density;
  c.error_excluded = c.error_part == 0;
  c.below_levels = c.integral <= c.level_bound * (1 + slack);
  c.below_density = c.window_average <= density * (1 + slack);
  c.density_at_most_one = density <= 1 + slack;
  c.at_most_one = c.integral <= 1 + slack;
  return c;
}

Json BudgetChain::to_json() const {
  return Json{{"integral", static_cast<double>(integral)},
              {"error_part", static_cast<double>(error_part)},
              {"level_bound", static_cast<double>(level_bound)},
              {"window_average", static_cast<double>(window_average)},
              {"density", static_cast<double>(density)},
              {"steps", {error_excluded, below_levels, below_density, density_at_most_one, at_most_one}},
              {"pass", pass()}};
}

Exceedance exceedance_from_residues(const TowerComplex& tower, std::int64_t modulus, const std::vector<bool>& qualifies,
                                    const Rational& epsilon_target) {
  check_epsilon(epsilon_target);
  if (static_cast<std::int64_t>(qualifies.size()) != modulus) throw DomainError("need one flag per residue");
  Exceedance e;
  e.qualifying = 0;
  e.qualifying_levels = 0;
  for (std::int64_t r = 0; r < modulus; ++r) {
    if (!qualifies[static_cast<std::size_t>(r)]) continue;
    e.qualifying += residue_count(tower.core_radius, tower.d, r, modulus);
    e.qualifying_levels += residue_count(tower.t, tower.d, r, modulus);
  }
  e.lattice_fraction = Rational(e.qualifying_levels, tower.level_count);
  e.mass = Rational(e.qualifying) * tower.level_mass;
  e.bound = (1 - 2 * epsilon_target) * (1 - tower.epsilon);
  e.hypothesis = e.lattice_fraction >= 1 - epsilon_target;
  e.pass = e.mass >= e.bound;
  return e;
}

Exceedance exceedance_measure(const TowerComplex& tower, const PeriodicAverages& table, long double K,
                              const Rational& epsilon_target, bool throw_on_shortfall) {
  std::vector<bool> q(static_cast<std::size_t>(table.modulus));
  for (std::int64_t r = 0; r < table.modulus; ++r) q[static_cast<std::size_t>(r)] = table.maximal(r) >= K;
  Exceedance e = exceedance_from_residues(tower, table.modulus, q, epsilon_target);
  if (throw_on_shortfall && !e.pass) {
    std::ostringstream os;
    os << "transference shortfall: mass " << format_real(real(e.mass)) << " below (1-2e)(1-e') = "
       << format_real(real(e.bound)) << " (lattice fraction " << format_real(real(e.lattice_fraction)) << ")";
    throw Error(os.str());
  }
  return e;
}

Json Exceedance::to_json() const {
  return Json{{"qualifying", to_string(qualifying)},
              {"qualifying_levels", to_string(qualifying_levels)},
              {"lattice_fraction", rational_text(lattice_fraction)},
              {"mass", static_cast<double>(real(mass))},
              {"mass_exact", rational_text(mass)},
              {"bound", static_cast<double>(real(bound))},
              {"hypothesis", hypothesis},
              {"pass", pass}};
}

Rational exceedance_by_levels(const TowerFunction& fbar, const LatticeSet& s, const std::vector<Window>& lambda,
                              long double K) {
  if (lambda.empty()) throw DomainError("maximal average over an empty window list");
  std::vector<std::vector<LatticePoint>> windows;
  BigInt work = 0;
  for (const auto& w : lambda) {
    windows.push_back(window_points(s, w));
    work += windows.back().size();
  }
  const BigInt core = fbar.tower.core_count;
  require_budget(core * work, "evaluating the tower level by level");
  BigInt hits = 0;
  std::vector<long double> vals;
  for_each_cube_point(to_int64(fbar.tower.core_radius), fbar.tower.d, [&](const LatticePoint& i) {
    long double best = 0;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      vals.clear();
      for (const auto& n : windows[w]) vals.push_back(std::fabs(fbar.on_level(i + n)));
      const long double a = pairwise_sum(vals) / static_cast<long double>(vals.size());
      if (w == 0 || a > best) best = a;
    }
    if (best >= K) ++hits;
  });
  return Rational(hits) * fbar.tower.level_mass;
}

OrliczScale orlicz_scale(const TowerFunction& fbar, const OrliczGauge& phi, int alpha, int steps, int max_doublings) {
  if (alpha < 0) throw DomainError("alpha must be a nonnegative integer");
  if (steps < 1 || max_doublings < 1) throw DomainError("search grid must be nonempty");
  const long double base = orlicz_integral(fbar, phi, 1);
  if (base > 1 + 1e-15L) throw DomainError("Orlicz integral of the lifted function exceeds 1");
  const long double target = std::ldexp(1.0L, -alpha);
  OrliczScale out;
  out.alpha = alpha;
  out.steps = steps;
  bool found = false;
  for (int i = 0; i <= steps * max_doublings; ++i) {
    const long double M = std::exp2(static_cast<long double>(i) / steps);
    const long double v = orlicz_integral(fbar, phi, M);
    if (v <= target) {
      out.M = M;
      out.grid_index = i;
      out.integral = v;
      found = true;
      break;
    }
  }
  if (!found) throw DomainError("gauge not small near zero: no scale up to 2^" + std::to_string(max_doublings));
  if (phi.power) {
    const long double q = phi.power->value();
    out.closed_form = std::exp2(alpha / q);
    out.closed_form_within_budget = orlicz_integral(fbar, phi, *out.closed_form) <= target * (1 + 1e-12L);
    const long double m_star = std::pow(std::ldexp(base, alpha), 1 / q);
    out.minimal_closed = m_star;
    if (m_star <= 1) {
      out.agrees_within_step = out.grid_index == 0;
    } else {
      out.agrees_within_step =
          out.M >= m_star * (1 - 1e-12L) && out.M < m_star * std::exp2(1.0L / steps) * (1 + 1e-12L);
    }
  }
  return out;
}

WitnessLevel witness_level(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f) {
  std::vector<BigInt> radii;
  for (const auto* r : plan.block(f.u())) radii.push_back(2 * r->choice.n);
  if (radii.empty()) throw DomainError("plan does not cover A_" + std::to_string(f.u()));
  return WitnessLevel{f.u(), f.periodic(), periodic_averages(s, f.periodic(), radii), window_delta(s, radii)};
}

namespace {

TransferRow run_tower(const WitnessLevel& w, const OrliczGauge& phi, const Rational& eps,
                      const std::optional<BigInt>& t, std::optional<int> alpha) {
  TransferRow row;
  row.alpha = alpha;
  row.u = w.u;
  row.epsilon = eps;
  row.epsilon_tower = eps / 2;
  row.delta = w.delta;
  row.t = t ? *t : minimal_tower_radius(w.f.dim, w.delta, row.epsilon_tower);
  const TowerComplex tower = build_tower(row.t, w.f.dim, row.epsilon_tower, w.delta);
  row.trim_fraction = tower.trim;
  const TowerFunction fbar = lift_function(tower, w.f);
  row.budget = budget_chain(fbar, phi, periodic_density(w.f, phi), eps).pass();
  if (alpha) {
    const OrliczScale sc = orlicz_scale(fbar, phi, *alpha);
    row.M = sc.M;
    row.orlicz_integral = sc.integral;
    row.budget = row.budget && sc.closed_form_within_budget && sc.agrees_within_step;
  } else {
    row.orlicz_integral = orlicz_integral(fbar, phi);
  }
  return row;
}

void finish_row(TransferRow& row, const WitnessLevel& w, const Rational& eps) {
  const TowerComplex tower = build_tower(row.t, w.f.dim, row.epsilon_tower, w.delta);
  const Exceedance e = exceedance_measure(tower, w.table, row.K, eps, false);
  row.exceedance_mass = e.mass;
  // recount class by class
  Rational again = 0;
  for (std::int64_t r = 0; r < w.table.modulus; ++r)
    if (w.table.maximal(r) >= row.K) again += Rational(residue_count(tower.core_radius, tower.d, r, w.table.modulus)) * tower.level_mass;
  row.identity = again == e.mass && tower.total_mass() == 1;
  row.bound = e.bound;
  row.pass = e.pass && row.identity && row.budget && e.mass > 1 - 3 * eps;
  row.status = row.pass ? "pass" : "fail";
}

bool reaches(const WitnessLevel& w, long double K) {
  for (std::int64_t r = 0; r < w.table.modulus; ++r)
    if (!(w.table.maximal(r) >= K)) return false;
  return true;
}

}  // namespace

TransferRow transfer_at(const WitnessLevel& w, const OrliczGauge& phi, long double K, const Rational& epsilon_target,
                        const std::optional<BigInt>& t) {
  check_epsilon(epsilon_target);
  TransferRow row = run_tower(w, phi, epsilon_target, t, std::nullopt);
  row.K = K;
  finish_row(row, w, epsilon_target);
  return row;
}

SynthesisReport synthesize_g(const std::vector<WitnessLevel>& levels, const OrliczGauge& phi, int alpha_min,
                             int alpha_max, const std::optional<BigInt>& t) {
  if (levels.empty()) throw DomainError("no witness levels to synthesize from");
  if (alpha_min < 1 || alpha_max < alpha_min) throw DomainError("alpha range must satisfy 1 <= min <= max");
  SynthesisReport rep;
  rep.pass = true;
  for (int alpha = alpha_min; alpha <= alpha_max; ++alpha) {
    const Rational eps(1, 3 * alpha);
    std::optional<TransferRow> chosen;
    for (const auto& w : levels) {
      TransferRow row = run_tower(w, phi, eps, t, alpha);
      row.K = alpha * row.M;
      if (reaches(w, row.K)) {
        finish_row(row, w, eps);
        row.bound = Rational(alpha - 1, alpha);
        row.pass = row.pass && row.exceedance_mass > row.bound;
        row.status = row.pass ? "pass" : "fail";
        chosen = std::move(row);
        break;
      }
      chosen = std::move(row);
      chosen->status = "unreached";
      chosen->bound = Rational(alpha - 1, alpha);
      chosen->exceedance_mass = 0;
    }
    if (chosen->status == "unreached" && alpha == 1) {
      // the bound 1 - 1/α is 0 here
      chosen->status = "pass";
      chosen->pass = true;
    }
    if (chosen->status == "fail") rep.pass = false;
    rep.budget_sum += chosen->orlicz_integral;
    rep.rows.push_back(std::move(*chosen));
  }
  rep.budget_ok = rep.budget_sum <= 1 + 1e-15L;
  rep.masses_nondecreasing = true;
  std::optional<Rational> last;
  for (const auto& r : rep.rows) {
    if (r.status != "pass" || r.exceedance_mass == 0) continue;
    if (last && r.exceedance_mass < *last) rep.masses_nondecreasing = false;
    last = r.exceedance_mass;
  }
  rep.pass = rep.pass && rep.budget_ok;
  return rep;
}

Json TransferRow::to_json() const {
  return Json{{"t", to_string(t)},
              {"alpha", alpha ? Json(*alpha) : Json(nullptr)},
              {"u", u ? Json(*u) : Json(nullptr)},
              {"epsilon", rational_text(epsilon)},
              {"epsilon_tower", rational_text(epsilon_tower)},
              {"delta", to_string(delta)},
              {"trim_fraction", static_cast<double>(real(trim_fraction))},
              {"orlicz_integral", static_cast<double>(orlicz_integral)},
              {"M", static_cast<double>(M)},
              {"K", static_cast<double>(K)},
              {"exceedance_mass", static_cast<double>(real(exceedance_mass))},
              {"exceedance_mass_exact", rational_text(exceedance_mass)},
              {"bound", static_cast<double>(real(bound))},
              {"identity", identity},
              {"budget", budget},
              {"status", status},
              {"pass", pass}};
}

Json SynthesisReport::to_json() const {
  Json r = Json::array();
  for (const auto& row : rows) r.push_back(row.to_json());
  return Json{{"alphas", r},
              {"budget_sum", static_cast<double>(budget_sum)},
              {"budget_ok", budget_ok},
              {"masses_nondecreasing", masses_nondecreasing},
              {"pass", pass}};
}

}  // namespace pertlab
