#include "doctest.h"
#include "oracle.hpp"

#include "pertlab/transference.hpp"

#include <cmath>
#include <memory>

using namespace pertlab;

namespace {

struct Witnessed {
  ConstructionPlan plan;
  std::shared_ptr<const PerturbedSet> s;
  std::vector<WitnessLevel> levels;
  std::vector<long double> thresholds;
};

const Witnessed& reference() {
  static const Witnessed w = [] {
    ConstructionConfig c;
    c.d = 2;
    c.q = Exponent{2, 1};
    c.u_min = 2;
    c.u_max = 4;
    c.base = std::make_shared<CubicRaySet>(2);
    Witnessed out{build_plan(c), nullptr, {}, {}};
    out.s = assemble_S(out.plan);
    for (int u = 2; u <= 4; ++u) {
      const auto ph = pigeonhole_Hj(out.plan, u);
      const auto f = build_f(u, Exponent{2, 1}, 2, ph.H, ph.j);
      out.levels.push_back(witness_level(*out.s, out.plan, f));
      out.thresholds.push_back(evaluate_divergence(*out.s, out.plan, f, 8 << u, 0).threshold);
    }
    return out;
  }();
  return w;
}

}  // namespace

TEST_CASE("minimal tower radius") {
  CHECK(minimal_tower_radius(1, 2, Rational(1, 10)) == 20);
  std::int64_t scan = 2;
  while (!(Rational(4, 2 * scan + 1) < Rational(1, 10))) ++scan;
  CHECK(scan == 20);
  CHECK(trim_fraction(20, 1, 2) == Rational(4, 41));
  CHECK_FALSE(trim_fraction(19, 1, 2) < Rational(1, 10));
  CHECK(minimal_tower_radius(3, 0, Rational(1, 100)) == 0);
  CHECK(trim_fraction(7, 2, 0) == 0);
  for (int d = 1; d <= 3; ++d)
    for (int delta = 1; delta <= 6; ++delta) {
      const Rational eps(1, 7);
      const BigInt t = minimal_tower_radius(d, delta, eps);
      CHECK(trim_fraction(t, d, delta) < eps);
      if (t > delta) CHECK_FALSE(trim_fraction(t - 1, d, delta) < eps);
      // trimmed share counted level by level
      if (t <= 40) {
        const auto ti = static_cast<std::int64_t>(t);
        std::int64_t trimmed = 0, total = 0;
        oracle::each_point(ti, d, [&](const LatticePoint& i) {
          ++total;
          if (oracle::linf(i) > ti - delta) ++trimmed;
        });
        CHECK(trim_fraction(t, d, delta) == Rational(trimmed, total));
      }
    }
}

TEST_CASE("build_tower") {
  const auto tw = build_tower(20, 1, Rational(1, 10), 2);
  CHECK(tw.total_mass() == 1);
  CHECK(tw.error_mass < tw.epsilon);
  CHECK(tw.level_mass == (1 - tw.error_mass) / 41);
  CHECK(tw.core_count == 37);
  CHECK_THROWS_WITH_AS(build_tower(19, 1, Rational(1, 10), 2), doctest::Contains("minimal admissible t is 20"), DomainError);
  const auto zero = build_tower(0, 2, Rational(1, 3), 0);
  CHECK(zero.trim == 0);
  CHECK(zero.total_mass() == 1);
  for (int d = 1; d <= 3; ++d)
    for (int t = 8; t <= 60; t += 11) {
      const auto x = build_tower(t, d, Rational(1, 3), 1);
      CHECK(std::fabs(to_double(x.level_mass * x.level_count + x.error_mass) - 1.0) <= 1e-15);
      CHECK(x.total_mass() == 1);
    }
}

TEST_CASE("lifted functions") {
  const auto tw = build_tower(12, 2, Rational(1, 2), 3);
  const auto zero = lift_function(tw, [](const LatticePoint&) -> long double { return 0; });
  const auto q2 = OrliczGauge::power_gauge(Exponent{2, 1});
  CHECK(orlicz_integral(zero, q2) == 0);
  const LatticeFunction f = [](const LatticePoint& i) -> long double { return 0.1L * (i[0] + 2 * i[1]) * (i[0] % 3 == 0); };
  for (auto support : {LiftSupport::AllLevels, LiftSupport::Core}) {
    const auto fb = lift_function(tw, f, support);
    long double direct = 0;
    oracle::each_point(12, 2, [&](const LatticePoint& i) {
      if (support == LiftSupport::Core && oracle::linf(i) > 9) return;
      direct += q2(std::fabs(f(i)));
    });
    direct *= static_cast<long double>(to_double(tw.level_mass));
    CHECK(orlicz_integral(fb, q2) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-14));
    CHECK(fb.on_error() == 0);
  }
  // translate identity on the core
  const auto fb = lift_function(tw, f);
  oracle::each_point(9, 2, [&](const LatticePoint& i) {
    oracle::each_point(3, 2, [&](const LatticePoint& n) { CHECK(fb.on_level(i + n) == f(i + n)); });
  });
  CHECK(fb.on_level(LatticePoint{13, 0}) == 0);
  const auto core = lift_function(tw, f, LiftSupport::Core);
  CHECK(core.on_level(LatticePoint{12, 3}) == 0);
}

TEST_CASE("budget chain") {
  const PeriodicFunction f{2, 4, 0, {std::sqrt(2.0L), 0, std::sqrt(2.0L), 0}};
  const auto q2 = OrliczGauge::power_gauge(Exponent{2, 1});
  CHECK(periodic_density(f, q2) == doctest::Approx(1.0));
  for (int t : {79, 80, 201}) {
    const auto tw = build_tower(t, 2, Rational(1, 20), 2);
    const auto fb = lift_function(tw, f);
    const auto c = budget_chain(fb, q2, periodic_density(f, q2), Rational(1, 10));
    CHECK(c.error_excluded);
    CHECK(c.below_levels);
    CHECK(c.below_density);
    CHECK(c.density_at_most_one);
    CHECK(c.at_most_one);
    CHECK(c.pass());
  }
  const PeriodicFunction big{1, 2, 0, {2, 0}};
  const auto fb = lift_function(build_tower(9, 1, Rational(1, 4), 1), big);
  CHECK_FALSE(budget_chain(fb, q2, periodic_density(big, q2), Rational(1, 10)).pass());
}

TEST_CASE("exceedance: residue route equals level-by-level evaluation") {
  std::vector<LatticePoint> pts{{0, 0}, {1, 2}, {-2, 1}, {3, 3}, {2, -1}, {-1, -3}, {3, 0}};
  const ExplicitSet s(2, pts);
  const PeriodicFunction f{2, 4, 1, {1.5L, 0, 0.25L, 0.75L}};
  const std::vector<BigInt> radii{1, 2, 3};
  const auto table = periodic_averages(s, f, radii);
  const BigInt delta = window_delta(s, radii);
  CHECK(delta == 3);
  std::vector<Window> lambda;
  for (const auto& r : radii) lambda.push_back({WindowKind::Cube, static_cast<std::int64_t>(r)});
  const Rational eps(1, 5);
  for (int t : {28, 29, 60}) {
    const auto tw = build_tower(t, 2, eps, delta);
    const auto fb = lift_function(tw, f);
    for (long double K : {0.0L, 0.2L, 0.41L, 0.63L, 0.9L, 5.0L}) {
      const auto e = exceedance_measure(tw, table, K, eps, false);
      CHECK(e.mass == exceedance_by_levels(fb, s, lambda, K));
      CHECK(e.mass == Rational(e.qualifying) * tw.level_mass);
    }
    // K = 0 keeps the whole core
    CHECK(exceedance_measure(tw, table, 0, eps, false).mass == (1 - tw.error_mass) * (1 - tw.trim));
    // monotone in K
    Rational last = 2;
    for (long double K = 0; K < 2; K += 0.05L) {
      const auto m = exceedance_measure(tw, table, K, eps, false).mass;
      CHECK(m <= last);
      last = m;
    }
  }
  const auto tw = build_tower(28, 2, eps, delta);
  CHECK_THROWS_WITH_AS(exceedance_measure(tw, table, 100, eps), doctest::Contains("transference shortfall"), Error);
}

TEST_CASE("exceedance with a full lattice fraction") {
  const auto tw = build_tower(400, 2, Rational(1, 30), 5);
  const auto e = exceedance_from_residues(tw, 4, {true, true, true, true}, Rational(1, 30));
  CHECK(e.lattice_fraction == 1);
  CHECK(e.hypothesis);
  CHECK(e.mass == (1 - tw.error_mass) * (1 - tw.trim));
  CHECK(e.mass >= (1 - tw.epsilon) * (1 - tw.trim));
  CHECK(e.mass > Rational(9, 10));
  CHECK(1 - 3 * Rational(1, 30) == Rational(9, 10));
  CHECK(e.pass);
}

TEST_CASE("Orlicz scaling") {
  const PeriodicFunction f{1, 8, 0, {std::sqrt(8.0L), 0, 0, 0, 0, 0, 0, 0}};
  for (auto q : {Exponent{1, 1}, Exponent{2, 1}, Exponent{3, 2}}) {
    const auto phi = OrliczGauge::power_gauge(q);
    const auto fb = lift_function(build_tower(64, 1, Rational(1, 10), 0), f);
    const long double base = orlicz_integral(fb, phi);
    if (base > 1) continue;
    long double total = 0;
    for (int alpha = 0; alpha <= 10; ++alpha) {
      const auto sc = orlicz_scale(fb, phi, alpha);
      CHECK(sc.integral <= std::ldexp(1.0L, -alpha));
      CHECK(*sc.closed_form == doctest::Approx(std::exp2(alpha / q.value())));
      CHECK(sc.closed_form_within_budget);
      CHECK(sc.agrees_within_step);
      CHECK(sc.M <= *sc.closed_form * (1 + 1e-12L));
      if (alpha == 0) CHECK(sc.M == 1);
      if (alpha >= 1) total += sc.integral;
    }
    CHECK(total <= 1);
  }
  const long double M3 = std::exp2(1.5L);
  CHECK(static_cast<double>(3 * M3) == doctest::Approx(8.485).epsilon(1e-4));

  OrliczGauge flat{"flat", [](long double t) -> long double { return t > 0 ? 0.5L : 0; }, std::nullopt};
  CHECK(flat.valid_on({0, 0.5L, 1}));
  const auto fb = lift_function(build_tower(8, 1, Rational(1, 10), 0), f);
  CHECK_THROWS_WITH_AS(orlicz_scale(fb, flat, 5, 8, 16), doctest::Contains("gauge not small near zero"), DomainError);
  OrliczGauge bad{"bad", [](long double t) { return 1 - t; }, std::nullopt};
  CHECK_FALSE(bad.valid_on({0, 1}));
}

TEST_CASE("transfer of certified witnesses") {
  const auto& w = reference();
  const auto phi = OrliczGauge::power_gauge(Exponent{2, 1});
  for (std::size_t i = 0; i < w.levels.size(); ++i) {
    const auto row = transfer_at(w.levels[i], phi, w.thresholds[i], Rational(1, 15), std::nullopt);
    CHECK(row.identity);
    CHECK(row.budget);
    CHECK(row.exceedance_mass > Rational(4, 5));
    CHECK(row.pass);
    const auto later = transfer_at(w.levels[i], phi, w.thresholds[i], Rational(1, 15), 10 * row.t);
    CHECK(later.pass);
    CHECK(later.exceedance_mass >= row.exceedance_mass);
  }
}

TEST_CASE("synthesis") {
  const auto& w = reference();
  const auto phi = OrliczGauge::power_gauge(Exponent{2, 1});
  const auto rep = synthesize_g(w.levels, phi, 1, 5);
  REQUIRE(rep.rows.size() == 5);
  CHECK(rep.rows[0].bound == 0);
  CHECK(rep.rows[0].status == "pass");
  CHECK(rep.rows[4].bound == Rational(4, 5));
  CHECK(rep.rows[4].epsilon == Rational(1, 15));
  CHECK(rep.rows[2].epsilon == Rational(1, 9));
  CHECK(rep.budget_ok);
  CHECK(rep.budget_sum <= 1);
  for (const auto& r : rep.rows) {
    CHECK(r.status != "fail");
    CHECK(r.K == doctest::Approx(static_cast<double>(*r.alpha * r.M)));
    if (r.status == "pass" && r.exceedance_mass > 0) CHECK(r.exceedance_mass > r.bound);
  }
  CHECK(rep.pass);
  CHECK_THROWS_AS(synthesize_g(w.levels, phi, 0, 3), DomainError);
}
