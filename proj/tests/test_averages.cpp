#include "doctest.h"
#include "oracle.hpp"

#include "pertlab/averages.hpp"

#include <cmath>
#include <memory>
#include <sstream>

using namespace pertlab;

namespace {

long double frac(long double v) { return v - std::floor(v); }

std::shared_ptr<RandomSet> random_set(int d) { return std::make_shared<RandomSet>(d, 3, d / 2.0); }

}  // namespace

TEST_CASE("normalization") {
  const FullLatticeSet z2(2);
  const auto one = [](const LatticePoint&) -> long double { return 1; };
  for (auto kind : {WindowKind::Cube, WindowKind::Ball})
    for (std::int64_t N = 0; N <= 12; N += 3) {
      CHECK(average_over(z2, {kind, N}, one) == 1);
      CHECK(average_over(*random_set(2), {kind, N}, lattice_orbit([](const LatticePoint&) { return 2.5L; }, {3, 4})) == 2.5L);
    }
  const auto torus = torus_orbit([](const std::vector<long double>&) { return 1.0L; }, TorusAction::standard(2), {0.1L, 0.7L});
  CHECK(average_over(z2, {WindowKind::Cube, 20}, torus) == 1);
  const auto bc = ball_vs_cube_average(z2, one, 9);
  CHECK(bc.cube == 1);
  CHECK(bc.ball == 1);
}

TEST_CASE("indicator of a superset") {
  const SublatticeSet even(2, 2);
  const auto ind = lattice_orbit([](const LatticePoint& y) -> long double { return (y[0] % 2 == 0 && y[1] % 2 == 0) ? 1 : 0; },
                                 {2, -4});
  CHECK(average_over(even, {WindowKind::Cube, 11}, ind) == 1);
  CHECK(average_over(even, {WindowKind::Ball, 11}, ind) == 1);
}

TEST_CASE("torus rotation, 21-term sum") {
  TorusAction a;
  a.dim = 1;
  a.alpha = {std::sqrt(2.0L) - 1};
  const auto h = torus_orbit([](const std::vector<long double>& x) { return x[0]; }, a, {0});
  long double direct = 0;
  for (std::int64_t g = -10; g <= 10; ++g) direct += frac(g * (std::sqrt(2.0L) - 1));
  direct /= 21;
  CHECK(std::fabs(static_cast<double>(average_over(FullLatticeSet(1), {WindowKind::Cube, 10}, h) - direct)) < 1e-15);

  const auto std3 = TorusAction::standard(3);
  CHECK(std3.alpha[0] == doctest::Approx(std::sqrt(2.0) - 1));
  CHECK(std3.alpha[1] == doctest::Approx(std::sqrt(3.0) - 1));
  CHECK(std3.alpha[2] == doctest::Approx(std::sqrt(5.0) - 2));
  CHECK_THROWS_AS(std3.apply({0, 0, 0}, LatticePoint{std::int64_t{1} << 40, 0, 0}), CapacityError);
}

TEST_CASE("maximal_over") {
  const auto s = random_set(2);
  const auto h = lattice_orbit([](const LatticePoint& y) -> long double { return std::sin(0.3L * y[0]) + 0.2L * y[1]; }, {1, 2});
  const auto abs_h = [&](const LatticePoint& g) { return std::fabs(h(g)); };
  CHECK(maximal_over(*s, {{WindowKind::Cube, 7}}, h) == average_over(*s, {WindowKind::Cube, 7}, abs_h));
  const std::vector<Window> lambda{{WindowKind::Cube, 3}, {WindowKind::Ball, 9}, {WindowKind::Cube, 15}};
  long double best = 0;
  for (const auto& w : lambda) best = std::max(best, average_over(*s, w, abs_h));
  CHECK(maximal_over(*s, lambda, h) == best);
  const auto twice = [&](const LatticePoint& g) { return 2 * h(g); };
  CHECK(maximal_over(*s, lambda, twice) == doctest::Approx(static_cast<double>(2 * maximal_over(*s, lambda, h))).epsilon(1e-15));
  CHECK_THROWS_AS(maximal_over(*s, {}, h), DomainError);
  CHECK_THROWS_AS(average_over(ExplicitSet(2, {}), {WindowKind::Cube, 4}, h), DivisionByZeroError);
}

TEST_CASE("linearity, homogeneity and shift covariance") {
  const auto s = random_set(2);
  const LatticeFunction f = [](const LatticePoint& y) -> long double { return std::cos(0.11L * y[0] * y[1]) + y[0]; };
  const LatticeFunction g = [](const LatticePoint& y) -> long double { return 1.0L / (1 + y[0] * y[0] + y[1] * y[1]); };
  const LatticeFunction sum = [&](const LatticePoint& y) { return f(y) + g(y); };
  const LatticeFunction scaled = [&](const LatticePoint& y) { return -3.25L * f(y); };
  const LatticePoint x{5, -2};
  for (auto kind : {WindowKind::Cube, WindowKind::Ball}) {
    const Window w{kind, 20};
    const long double af = average_over(*s, w, lattice_orbit(f, x));
    const long double ag = average_over(*s, w, lattice_orbit(g, x));
    const long double as = average_over(*s, w, lattice_orbit(sum, x));
    CHECK(std::fabs(static_cast<double>(as - (af + ag))) <= 1e-12 * std::fabs(static_cast<double>(as)));
    CHECK(std::fabs(static_cast<double>(average_over(*s, w, lattice_orbit(scaled, x)) + 3.25L * af)) <=
          1e-12 * std::fabs(static_cast<double>(af)));
    const LatticePoint v{7, 3};
    const LatticeFunction shifted = [&](const LatticePoint& y) { return f(y + v); };
    CHECK(average_over(*s, w, lattice_orbit(shifted, x)) == average_over(*s, w, lattice_orbit(f, x + v)));
  }
}

TEST_CASE("exact mode matches naive enumeration") {
  const auto s = random_set(2);
  for (auto kind : {WindowKind::Cube, WindowKind::Ball})
    for (std::int64_t N : {0, 5, 20, 49}) {
      const ExactOrbit h = [](const LatticePoint& g) { return Rational(g[0] * 3 - g[1], 1 + (g[1] & 3)); };
      const Rational got = average_exact(*s, {kind, N}, h);
      Rational sum = 0;
      std::int64_t count = 0;
      oracle::each_point(N, 2, [&](const LatticePoint& g) {
        const bool in = kind == WindowKind::Cube || oracle::norm2(g) <= N * N;
        if (in && s->contains(g)) {
          sum += h(g);
          ++count;
        }
      });
      CHECK(count <= 10000);
      CHECK(got == sum / count);
    }
}

TEST_CASE("residue route matches direct averages") {
  const auto s = random_set(2);
  PeriodicFunction f{2, 8, 1, {3, 0, 1, 0, 0, 2, 0, 0}};
  const std::vector<BigInt> radii{4, 9, 30};
  const auto table = periodic_averages(*s, f, radii);
  for (std::int64_t t = -8; t < 8; ++t) {
    const LatticePoint x{1, t};
    long double best = 0;
    for (std::size_t w = 0; w < radii.size(); ++w) {
      const long double direct = average_over(*s, {WindowKind::Cube, static_cast<std::int64_t>(radii[w])}, lattice_orbit(f, x));
      CHECK(table.average(w, t) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-14));
      best = std::max(best, direct);
    }
    CHECK(table.maximal(t) == doctest::Approx(static_cast<double>(best)).epsilon(1e-14));
  }
}

TEST_CASE("goodness_diagnostic") {
  SUBCASE("S = D") {
    ConstructionPlan empty_plan;
    const PerturbedSet s(std::make_shared<FullLatticeSet>(1), {});
    const auto h = torus_orbit([](const std::vector<long double>& x) -> long double { return x[0] < 0.5L ? 1 : 0; },
                               TorusAction::standard(1), {0});
    const auto rep = goodness_diagnostic(s, empty_plan, h, 1, {10, 100, 1000});
    for (const auto& r : rep.rows) CHECK(r.second_term == 0);
    CHECK(std::fabs(static_cast<double>(rep.rows.back().main_term) - 0.5) < 0.05);
  }
  SUBCASE("bounded f on a perturbed set") {
    ConstructionConfig c;
    c.d = 2;
    c.u_min = 2;
    c.u_max = 3;
    c.base = std::make_shared<CubicRaySet>(2);
    const auto plan = build_plan(c);
    const auto s = assemble_S(plan);
    const auto h = torus_orbit([](const std::vector<long double>& x) { return std::sin(6.28L * x[0]) * x[1]; },
                               TorusAction::standard(2), {0.25L, 0.5L});
    std::vector<std::int64_t> Ns;
    for (const auto& r : plan.records)
      if (r.choice.n < 1'000'000'000) Ns.push_back(static_cast<std::int64_t>(r.choice.n));
    const auto rep = goodness_diagnostic(*s, plan, h, 1, Ns);
    for (const auto& r : rep.rows) {
      CHECK(std::fabs(static_cast<double>(r.second_term)) <= static_cast<double>(r.bound) + 1e-18);
      REQUIRE(r.regime_bound);
      CHECK(r.bound <= *r.regime_bound);
      CHECK(r.main_term + r.second_term == doctest::Approx(static_cast<double>(
                                               average_over(*s, {WindowKind::Cube, static_cast<std::int64_t>(r.N)}, h) *
                                               static_cast<long double>(to_double(s->count_in_cube(r.N))) /
                                               static_cast<long double>(to_double(r.base_count)))));
    }
  }
}

TEST_CASE("ball and cube averages") {
  const auto s = random_set(2);
  const std::int64_t N = 15;
  const auto inside = lattice_orbit([&](const LatticePoint& y) -> long double { return oracle::norm2(y) <= N * N ? 1 + y[0] * 0.01L : 0; },
                                    {0, 0});
  const auto r = ball_vs_cube_average(*s, inside, N);
  const long double scale = static_cast<long double>(to_double(r.ball_count)) / static_cast<long double>(to_double(r.cube_count));
  CHECK(r.cube <= r.ball * scale * (1 + 1e-15L));
  CHECK(r.ratio == doctest::Approx(static_cast<double>(r.ball / r.cube)));

  ConstructionConfig c;
  c.d = 2;
  c.u_min = 2;
  c.u_max = 2;
  c.base = std::make_shared<CubicRaySet>(2);
  const auto plan = build_plan(c);
  const auto sp = assemble_S(plan);
  const auto ph = pigeonhole_Hj(plan, 2);
  const auto f = build_f(2, Exponent{1, 1}, 2, ph.H, ph.j);
  const LatticePoint x{1, 3};
  for (const auto& rec : plan.records) {
    const auto n2 = static_cast<std::int64_t>(2 * rec.choice.n);
    const auto got = ball_vs_cube_average(*sp, lattice_orbit(f, x), n2);
    long double cube = 0, ball = 0;
    std::int64_t nc = 0, nb = 0;
    for (const auto& g : sp->points_in_cube(n2)) {
      cube += f(x + g);
      ++nc;
      if (g.norm2() <= static_cast<unsigned __int128>(n2) * static_cast<unsigned __int128>(n2)) {
        ball += f(x + g);
        ++nb;
      }
    }
    CHECK(got.cube_count == nc);
    CHECK(got.ball_count == nb);
    CHECK(got.cube == doctest::Approx(static_cast<double>(cube / nc)));
    CHECK(got.ball == doctest::Approx(static_cast<double>(ball / nb)));
  }
}

TEST_CASE("divergence trace CSV") {
  ConstructionConfig c;
  c.d = 2;
  c.u_min = 2;
  c.u_max = 3;
  c.base = std::make_shared<CubicRaySet>(2);
  const auto plan = build_plan(c);
  const auto s = assemble_S(plan);
  const auto ph = pigeonhole_Hj(plan, 3);
  const auto f = build_f(3, Exponent{1, 1}, 2, ph.H, ph.j);
  std::vector<LatticePoint> xs;
  for (std::int64_t t = 0; t < 5; ++t) xs.push_back(LatticePoint{t, -t});
  const auto trace = divergence_trace(*s, plan, f, xs, 0.1L);
  CHECK(trace.rows.size() == 8 * xs.size());
  std::ostringstream os;
  write_trace_csv(os, trace);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k_or_N\twindow_kind\tcount\taverage\tmaximal\tthreshold\tpass\tx");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), '\t') == 7);
    const std::string numeric = line.substr(0, line.rfind('\t'));
    CHECK(numeric.find(',') == std::string::npos);
  }
  CHECK(rows == trace.rows.size());
  for (std::size_t i = 1; i < trace.rows.size(); ++i)
    if (trace.rows[i].x == trace.rows[i - 1].x) CHECK(trace.rows[i].maximal >= trace.rows[i - 1].maximal);
  AverageTrace plain{"pointwise", {TraceRow{BigInt(3), WindowKind::Ball, BigInt(10), 0.5L, 0.5L, std::nullopt, false, "(0)"}}};
  std::ostringstream os2;
  write_trace_csv(os2, plain);
  CHECK(os2.str().find("3\tball\t10\t0.5\t0.5\tNA\tNA\t(0)") != std::string::npos);
  CHECK(format_real(0.125L) == "0.125");
}
