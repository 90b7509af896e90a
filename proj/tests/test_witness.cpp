#include "doctest.h"
#include "oracle.hpp"

#include "pertlab/witness.hpp"

#include <cmath>
#include <map>
#include <memory>

using namespace pertlab;

namespace {

ConstructionPlan make_plan(int d, Exponent q, int u_max, Regime regime = Regime::T1,
                           std::optional<Exponent> p = std::nullopt) {
  ConstructionConfig c;
  c.regime = regime;
  c.q = q;
  c.p = p;
  c.d = d;
  c.u_min = 2;
  c.u_max = u_max;
  c.base = std::make_shared<CubicRaySet>(d);
  return build_plan(c);
}

const ConstructionPlan& small_plan() {
  static const ConstructionPlan plan = make_plan(2, Exponent{1, 1}, 3);
  return plan;
}

}  // namespace

TEST_CASE("phi_eval") {
  CHECK(phi_eval(2, Exponent{2, 1}, LatticePoint{4, -8}) == doctest::Approx(2));
  CHECK(phi_eval(2, Exponent{2, 1}, LatticePoint{4, 3}) == 0);
  CHECK(phi_eval(3, Exponent{1, 1}, LatticePoint{0, 0, 0}) == doctest::Approx(8));
  CHECK(phi_eval(4, Exponent{3, 2}, LatticePoint{-16}) == doctest::Approx(std::pow(2.0, 4 / 1.5)));
}

TEST_CASE("pigeonhole against a brute-force tally") {
  const auto& plan = small_plan();
  for (int u = 2; u <= 3; ++u) {
    const auto res = pigeonhole_Hj(plan, u);
    const std::int64_t m = std::int64_t{1} << u;
    std::map<BigInt, int> j_of_k;
    std::vector<int> freq(2, 0);
    for (const auto* r : plan.block(u)) {
      std::vector<std::int64_t> tally(2, 0);
      for (const auto& g : r->added.points_in_cube(2 * r->choice.n))
        for (int j = 0; j < 2; ++j)
          if (mod_floor(g[j] - r->choice.k, m) == 0) ++tally[static_cast<std::size_t>(j)];
      const int best = tally[1] > tally[0] ? 1 : 0;
      j_of_k[r->choice.k] = best;
      ++freq[static_cast<std::size_t>(best)];
      CHECK(res.counts.at(r->choice.k)[0] == tally[0]);
      CHECK(res.counts.at(r->choice.k)[1] == tally[1]);
    }
    const int j = freq[1] > freq[0] ? 1 : 0;
    CHECK(res.j == j);
    CHECK(res.j_of_k == j_of_k);
    std::vector<BigInt> H;
    for (const auto& [k, jk] : j_of_k)
      if (jk == j) H.push_back(k);
    CHECK(res.H == H);
    CHECK(BigInt(res.H.size()) * 2 >= pow2(static_cast<std::uint64_t>(u)));
  }
  CHECK(pigeonhole_Hj(small_plan(), 3).H.size() >= 4);
}

TEST_CASE("pigeonhole in d = 1") {
  const auto plan = make_plan(1, Exponent{1, 1}, 2);
  const auto res = pigeonhole_Hj(plan, 2);
  CHECK(res.j == 0);
  CHECK(res.H == std::vector<BigInt>{4, 5, 6, 7});
  for (const auto* r : plan.block(2)) CHECK(res.counts.at(r->choice.k)[0] == r->choice.quota);
}

TEST_CASE("build_f") {
  SUBCASE("d = 1 gives phi") {
    const auto f = build_f(3, Exponent{2, 1}, 1, {8, 9}, 0);
    for (std::int64_t x = -40; x <= 40; ++x) CHECK(f(LatticePoint{x}) == phi_eval(3, Exponent{2, 1}, LatticePoint{x}));
  }
  SUBCASE("disjoint supports and the translate value") {
    for (int d = 1; d <= 3; ++d)
      for (int u = 2; u <= 4; ++u) {
        std::vector<BigInt> H;
        const BigInt need = (pow2(static_cast<std::uint64_t>(u)) + d - 1) / d;
        for (BigInt k = UBlock{u}.first(); BigInt(H.size()) < need; ++k) H.push_back(k);
        const int j = d - 1;
        const auto f = build_f(u, Exponent{1, 1}, d, H, j);
        const long double level = std::pow(2.0L, u) / d;
        CHECK(f.level() == doctest::Approx(static_cast<double>(level)));
        const std::int64_t L = d == 3 ? 9 : 2 * (std::int64_t{1} << u);
        const auto cover = residue_cover(u, H, j, f.shifts(), L, d);
        oracle::each_point(L, d, [&](const LatticePoint& x) {
          int on = 0;
          long double sum = 0;
          for (int i = 0; i < d; ++i) {
            const long double v = f.phi_i(i, x);
            if (v != 0) ++on;
            sum += v;
          }
          CHECK(on <= 1);
          CHECK(f(x) == doctest::Approx(static_cast<double>(sum / d)));
          // some h ∈ H lifts x onto the support
          bool reached = false;
          for (const auto& h : H) {
            LatticePoint y = x;
            y[j] += static_cast<std::int64_t>(h);
            if (f(y) == level) reached = true;
          }
          CHECK(reached);
        });
        CHECK(cover.union_size == cube_count_big(L, d));
      }
  }
  SUBCASE("maps are bijections with pi_0 = identity") {
    const auto f = build_f(4, Exponent{1, 1}, 3, {16, 17, 18, 19, 20, 21}, 0);
    for (int i = 0; i < 3; ++i) {
      std::vector<bool> seen(16, false);
      for (std::int64_t t = 0; t < 16; ++t) seen[static_cast<std::size_t>(f.pi(i, t))] = true;
      CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    }
    for (std::int64_t t = 0; t < 16; ++t) CHECK(f.pi(0, t) == t);
    CHECK_THROWS_AS(build_f(2, Exponent{1, 1}, 2, {4, 5}, 0, std::vector<std::int64_t>{1, 2}), DomainError);
    CHECK_THROWS_AS(build_f(2, Exponent{1, 1}, 2, {3}, 0), DomainError);
  }
}

TEST_CASE("translation identity on E_h") {
  const auto& plan = small_plan();
  const auto s = assemble_S(plan);
  for (int u = 2; u <= 3; ++u) {
    const auto ph = pigeonhole_Hj(plan, u);
    const auto f = build_f(u, Exponent{1, 1}, 2, ph.H, ph.j);
    const std::int64_t L = 2 * (std::int64_t{1} << u);
    oracle::each_point(L, 2, [&](const LatticePoint& x) {
      for (const auto& h : ph.H) {
        LatticePoint y = x;
        y[ph.j] += static_cast<std::int64_t>(h);
        if (f(y) != f.level()) continue;
        const PlanRecord* r = plan.find(h);
        std::int64_t good = 0;
        for (const auto& g : r->added.points_in_cube(2 * r->choice.n)) good += f(x + g) == f.level() ? 1 : 0;
        CHECK(BigInt(good) >= ph.counts.at(h)[static_cast<std::size_t>(ph.j)]);
        break;
      }
    });
  }
}

TEST_CASE("density_budget") {
  const PeriodicFunction phi{1, 4, 0, {2, 0, 0, 0}};
  const auto b = density_budget(phi, Exponent{2, 1}, {8});
  CHECK(b.rows[0].value == doctest::Approx(20.0 / 17.0));
  CHECK(density_budget_enumerated(phi, Exponent{2, 1}, 8) == doctest::Approx(20.0 / 17.0));
  const auto zero = density_budget(PeriodicFunction::zero(2, 8), Exponent{3, 2}, {1, 5, 40});
  for (const auto& r : zero.rows) CHECK(r.value == 0);
  for (int u = 1; u <= 5; ++u) {
    const std::int64_t m = std::int64_t{1} << u;
    PeriodicFunction f{1, m, 0, std::vector<long double>(static_cast<std::size_t>(m), 0)};
    f.values[0] = std::pow(2.0L, u);
    for (std::int64_t L = m; L <= 64 * m; L *= 2) {
      const double closed = static_cast<double>(m * (2 * L / m + 1)) / static_cast<double>(2 * L + 1);
      CHECK(density_budget(f, Exponent{1, 1}, {L}).rows[0].value == doctest::Approx(closed));
      if (L <= 200) CHECK(density_budget_enumerated(f, Exponent{1, 1}, L) == doctest::Approx(closed));
    }
  }
  // the witness f in d = 2 against enumeration
  const auto f = build_f(3, Exponent{2, 1}, 2, {8, 9, 10, 11}, 1);
  for (std::int64_t L : {5, 8, 16, 33})
    CHECK(density_budget(f.periodic(), Exponent{2, 1}, {L}).rows[0].value ==
          doctest::Approx(static_cast<double>(density_budget_enumerated(f.periodic(), Exponent{2, 1}, L))));
}

TEST_CASE("residue_cover") {
  const auto one = residue_cover(2, {4, 5, 6, 7}, 0, {0}, 10, 1);
  CHECK(one.by_map[0] == std::vector<std::int64_t>{0, 1, 2, 3});
  CHECK(one.union_size == 21);

  const auto two = residue_cover(2, {4, 5}, 0, default_shifts(2, 2), 12, 2);
  CHECK(two.by_map.size() == 2);
  std::vector<std::int64_t> all;
  for (const auto& h : two.by_map) all.insert(all.end(), h.begin(), h.end());
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::int64_t>{0, 1, 2, 3});
  std::size_t listed = 0;
  for (int i = 0; i < 2; ++i) listed += residue_cover_points(two, i, 0, 2).size();
  CHECK(listed == cube_count(12, 2));

  CHECK_THROWS_WITH_AS(residue_cover(2, {4}, 0, {0, 0}, 12, 2), doctest::Contains("cover gap"), DomainError);
}

TEST_CASE("certify_divergence against direct sums") {
  const auto& plan = small_plan();
  const auto s = assemble_S(plan);
  const int u = 2;
  const auto ph = pigeonhole_Hj(plan, u);
  const auto f = build_f(u, witness_exponent(plan), 2, ph.H, ph.j);
  const std::int64_t L = 8 * 4;
  const auto cert = certify_divergence(*s, plan, f, L);
  CHECK(cert.pass);
  CHECK(cert.pass_fraction == 1);
  CHECK(cert.chain_pass);
  CHECK(cert.brute_force_agree);
  CHECK(cert.threshold == doctest::Approx(2.0 / 36.0));

  std::vector<std::vector<LatticePoint>> windows;
  for (const auto* r : plan.block(u)) windows.push_back(s->points_in_cube(static_cast<std::int64_t>(2 * r->choice.n)));
  long double min_max = 1e300;
  oracle::each_point(L, 2, [&](const LatticePoint& x) {
    long double best = 0;
    for (const auto& w : windows) {
      long double sum = 0;
      for (const auto& g : w) sum += std::fabs(f(x + g));
      best = std::max(best, sum / static_cast<long double>(w.size()));
    }
    const auto t = static_cast<std::size_t>(residue_of(x[ph.j], 4));
    CHECK(best == doctest::Approx(static_cast<double>(cert.max_average_by_residue[t])));
    CHECK(best > cert.threshold);
    min_max = std::min(min_max, best);
  });
  CHECK(static_cast<double>(min_max) == doctest::Approx(static_cast<double>(cert.min_max_average)));
}

TEST_CASE("certificate thresholds") {
  const auto t1 = make_plan(2, Exponent{2, 1}, 4);
  const auto s1 = assemble_S(t1);
  const auto ph1 = pigeonhole_Hj(t1, 4);
  const auto c1 = certify_divergence(*s1, t1, build_f(4, Exponent{2, 1}, 2, ph1.H, ph1.j), 128);
  CHECK(c1.threshold == doctest::Approx(1.0 / 18.0));
  CHECK(c1.pass_fraction == 1);

  const auto t2 = make_plan(2, Exponent{2, 1}, 4, Regime::T2, Exponent{1, 1});
  const auto s2 = assemble_S(t2);
  const auto ph2 = pigeonhole_Hj(t2, 4);
  const auto f2 = build_f(4, witness_exponent(t2), 2, ph2.H, ph2.j);
  CHECK(f2.level() == doctest::Approx(16.0 / 2.0));  // 2^{u/p}/d with p = 1
  const auto c2 = certify_divergence(*s2, t2, f2, 128);
  CHECK(c2.threshold == doctest::Approx(1.0 / 36.0));
  CHECK(c2.pass_fraction == 1);
  // γ = (q - p)/(pq) = 1/2
  const double gamma = (2.0 - 1.0) / (1.0 * 2.0);
  CHECK(gamma == 0.5);
  CHECK(c2.threshold == doctest::Approx(std::pow(2.0, gamma * 4) / (std::pow(4.0, 2.0 / 2.0) * 4 * 9)));
  CHECK_THROWS_AS(evaluate_divergence(*s2, t2, build_f(4, Exponent{2, 1}, 2, ph2.H, ph2.j), 16), DomainError);
}

TEST_CASE("divergence shortfall is reported") {
  const auto& plan = small_plan();
  std::vector<LatticePoint> dense;
  for (std::int64_t a = -100; a <= 100; a += 4)
    for (std::int64_t b = -100; b <= 100; ++b) dense.push_back(LatticePoint{a, b});
  std::vector<AddedSet> added;
  for (const auto& r : plan.records) added.push_back(r.added);
  const PerturbedSet diluted(std::make_shared<ExplicitSet>(2, dense), added);
  const auto ph = pigeonhole_Hj(plan, 2);
  const auto f = build_f(2, Exponent{1, 1}, 2, ph.H, ph.j, std::vector<std::int64_t>{0, 0});
  const auto cert = evaluate_divergence(diluted, plan, f, 32);
  CHECK_FALSE(cert.pass);
  CHECK(cert.pass_fraction < 1);
  CHECK_THROWS_WITH_AS(certify_divergence(diluted, plan, f, 32), doctest::Contains("divergence shortfall"), Error);
}
