#include "pertlab/parallel.hpp"
#include "pertlab/transference.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace pertlab;

namespace {

ConstructionConfig reference(Exponent q) {
  ConstructionConfig c;
  c.d = 2;
  c.q = q;
  c.u_min = 2;
  c.u_max = 4;
  c.base = std::make_shared<CubicRaySet>(2);
  return c;
}

const ConstructionPlan& plan() {
  static const ConstructionPlan p = build_plan(reference({2, 1}));
  return p;
}

void BM_ShellEnumeration(benchmark::State& state) {
  const auto n = state.range(0);
  const int d = static_cast<int>(state.range(1));
  std::uint64_t seen = 0;
  for (auto _ : state) {
    for_each_shell_point(n, d, [&](const LatticePoint& x) { seen += static_cast<std::uint64_t>(x[0] & 1); });
    benchmark::DoNotOptimize(seen);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(to_double(shell_count_big(n, d))));
}
BENCHMARK(BM_ShellEnumeration)->Args({64, 2})->Args({512, 2})->Args({24, 3});

void BM_RandomSetCubeCount(benchmark::State& state) {
  const RandomSet s(2, 3, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(s.count_in_cube(state.range(0)));
}
BENCHMARK(BM_RandomSetCubeCount)->Arg(100)->Arg(1000);

void BM_ResidueHistogram(benchmark::State& state) {
  const auto s = assemble_S(plan());
  const BigInt radius = 2 * plan().block(3).back()->choice.n;
  for (auto _ : state) benchmark::DoNotOptimize(s->residues_in_cube(radius, 8).total());
}
BENCHMARK(BM_ResidueHistogram);

void BM_BuildPlan(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_plan(reference({1, 1})).records.size());
}
BENCHMARK(BM_BuildPlan)->Unit(benchmark::kMillisecond);

void BM_VerifyPlan(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(verify_plan(plan()).pass);
}
BENCHMARK(BM_VerifyPlan)->Unit(benchmark::kMillisecond);

// window counting with a varying worker count; results must not depend on it
void BM_MaximalAverage(benchmark::State& state) {
  set_worker_count(static_cast<unsigned>(state.range(0)));
  const auto s = assemble_S(plan());
  const auto f = build_f(2, Exponent{2, 1}, 2, pigeonhole_Hj(plan(), 2).H, pigeonhole_Hj(plan(), 2).j);
  std::vector<Window> lambda;
  for (const auto* r : plan().block(2)) lambda.push_back({WindowKind::Cube, to_int64(2 * r->choice.n)});
  const Orbit h = [&](const LatticePoint& g) { return f(g); };
  for (auto _ : state) benchmark::DoNotOptimize(maximal_over(*s, lambda, h));
  set_worker_count(1);
}
BENCHMARK(BM_MaximalAverage)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State& state) {
  const auto s = assemble_S(plan());
  const int u = static_cast<int>(state.range(0));
  const auto ph = pigeonhole_Hj(plan(), u);
  const auto f = build_f(u, Exponent{2, 1}, 2, ph.H, ph.j);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_divergence(*s, plan(), f, 8 << u, 0).min_max_average);
}
BENCHMARK(BM_Certify)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_TowerExceedance(benchmark::State& state) {
  const auto s = assemble_S(plan());
  const auto ph = pigeonhole_Hj(plan(), 3);
  const auto level = witness_level(*s, plan(), build_f(3, Exponent{2, 1}, 2, ph.H, ph.j));
  const BigInt t = minimal_tower_radius(2, level.delta, Rational(1, 30)) * state.range(0);
  const auto tower = build_tower(t, 2, Rational(1, 30), level.delta);
  for (auto _ : state)
    benchmark::DoNotOptimize(exceedance_measure(tower, level.table, 0.01L, Rational(1, 15), false).mass);
}
BENCHMARK(BM_TowerExceedance)->Arg(1)->Arg(1000);

void BM_OrliczScale(benchmark::State& state) {
  const PeriodicFunction f{2, 16, 0, std::vector<long double>(16, 0.5L)};
  const auto fbar = lift_function(build_tower(400, 2, Rational(1, 10), 4), f);
  const auto phi = OrliczGauge::power_gauge(Exponent{2, 1});
  for (auto _ : state) benchmark::DoNotOptimize(orlicz_scale(fbar, phi, static_cast<int>(state.range(0))).M);
}
BENCHMARK(BM_OrliczScale)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
