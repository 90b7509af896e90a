#include "pertlab/averages.hpp"

#include "pertlab/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace pertlab {

std::string to_string(WindowKind k) { return k == WindowKind::Cube ? "cube" : "ball"; }

TorusAction TorusAction::standard(int dim) {
  validate_dim(dim);
  TorusAction a;
  a.dim = dim;
  for (std::int64_t n = 2; static_cast<int>(a.alpha.size()) < dim; ++n) {
    bool prime = true;
    for (std::int64_t p = 2; p * p <= n; ++p)
      if (n % p == 0) prime = false;
    if (!prime) continue;
    const long double r = std::sqrt(static_cast<long double>(n));
    a.alpha.push_back(r - std::floor(r));
  }
  return a;
}

std::vector<long double> TorusAction::apply(const std::vector<long double>& x, const LatticePoint& g) const {
  constexpr std::int64_t limit = std::int64_t{1} << 32;
  std::vector<long double> y(x.size());
  for (int i = 0; i < dim; ++i) {
    if (g[i] > limit || g[i] < -limit) throw CapacityError("torus rotation step too large for long double");
    long double v = x[static_cast<std::size_t>(i)] + static_cast<long double>(g[i]) * alpha[static_cast<std::size_t>(i)];
    v -= std::floor(v);
    y[static_cast<std::size_t>(i)] = v;
  }
  return y;
}

Orbit lattice_orbit(LatticeFunction f, LatticePoint x) {
  return [f = std::move(f), x = std::move(x)](const LatticePoint& g) { return f(x + g); };
}

Orbit torus_orbit(TorusFunction f, TorusAction action, std::vector<long double> x) {
  if (static_cast<int>(x.size()) != action.dim) throw DomainError("torus point has the wrong dimension");
  return [f = std::move(f), action = std::move(action), x = std::move(x)](const LatticePoint& g) {
    return f(action.apply(x, g));
  };
}

namespace {

long double pairwise(const long double* v, std::size_t n) {
  if (n <= 8) {
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h) + pairwise(v + h, n - h);
}

std::vector<long double> evaluate(const std::vector<LatticePoint>& pts, const Orbit& h, bool absolute) {
  std::vector<long double> vals(pts.size());
  parallel_chunks(pts.size(), 64, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) vals[i] = absolute ? std::fabs(h(pts[i])) : h(pts[i]);
  });
  return vals;
}

}  // namespace

long double pairwise_sum(const std::vector<long double>& values) { return pairwise(values.data(), values.size()); }

std::vector<LatticePoint> window_points(const LatticeSet& s, const Window& w) {
  if (w.radius < 0) throw DomainError("window radius must be nonnegative");
  auto pts = w.kind == WindowKind::Cube ? s.points_in_cube(w.radius) : s.points_in_ball(w.radius);
  if (pts.empty()) throw DivisionByZeroError("empty window: " + to_string(w.kind) + " of radius " + std::to_string(w.radius));
  return pts;
}

long double average_over(const LatticeSet& s, const Window& w, const Orbit& h) {
  const auto pts = window_points(s, w);
  return pairwise_sum(evaluate(pts, h, false)) / static_cast<long double>(pts.size());
}

Rational average_exact(const LatticeSet& s, const Window& w, const ExactOrbit& h) {
  const auto pts = window_points(s, w);
  Rational sum = 0;
  for (const auto& g : pts) sum += h(g);
  return sum / static_cast<std::int64_t>(pts.size());
}

long double maximal_over(const LatticeSet& s, const std::vector<Window>& lambda, const Orbit& h) {
  if (lambda.empty()) throw DomainError("maximal average over an empty window list");
  long double best = 0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const auto pts = window_points(s, lambda[i]);
    const long double a = pairwise_sum(evaluate(pts, h, true)) / static_cast<long double>(pts.size());
    if (i == 0 || a > best) best = a;
  }
  return best;
}

long double PeriodicAverages::average(std::size_t window, std::int64_t residue) const {
  return sums.at(window).at(static_cast<std::size_t>(residue_of(residue, modulus))) /
         static_cast<long double>(to_double(totals.at(window)));
}

long double PeriodicAverages::maximal(std::int64_t residue) const {
  long double best = 0;
  for (std::size_t w = 0; w < radii.size(); ++w) best = std::max(best, average(w, residue));
  return best;
}

PeriodicAverages periodic_averages(const LatticeSet& s, const PeriodicFunction& f, const std::vector<BigInt>& radii) {
  if (s.dim() != f.dim) throw DomainError("function and set dimensions differ");
  PeriodicAverages out;
  out.modulus = f.modulus;
  out.coord = f.coord;
  out.radii = radii;
  const auto m = static_cast<std::size_t>(f.modulus);
  for (const auto& r : radii) {
    const auto hist = s.residues_in_cube(r, f.modulus);
    const BigInt total = hist.total();
    if (total == 0) throw DivisionByZeroError("empty window: cube of radius " + to_string(r));
    const auto marginal = hist.marginal(f.coord);
    std::vector<BigInt> hits(m, BigInt(0));
    std::vector<long double> sums(m, 0);
    for (std::size_t t = 0; t < m; ++t)
      for (std::size_t y = 0; y < m; ++y) {
        const long double v = std::fabs(f.values[(t + y) % m]);
        if (v == 0 || marginal[y] == 0) continue;
        hits[t] += marginal[y];
        sums[t] += v * static_cast<long double>(to_double(marginal[y]));
      }
    out.totals.push_back(total);
    out.hits.push_back(std::move(hits));
    out.sums.push_back(std::move(sums));
  }
  return out;
}

GoodnessReport goodness_diagnostic(const PerturbedSet& s, const ConstructionPlan& plan, const Orbit& h,
                                   long double sup_abs, const std::vector<std::int64_t>& N_list) {
  GoodnessReport rep;
  auto added_points = [&](std::int64_t radius) {
    std::vector<LatticePoint> pts;
    for (const auto& e : s.added()) {
      auto more = e.points_in_cube(radius);
      pts.insert(pts.end(), more.begin(), more.end());
    }
    std::sort(pts.begin(), pts.end());
    return pts;
  };
  for (auto N : N_list) {
    GoodnessRow row;
    row.N = N;
    const auto dn = s.base().points_in_cube(N);
    if (dn.empty()) throw DivisionByZeroError("empty window: D_N with N = " + std::to_string(N));
    const auto en = added_points(N);
    const auto denom = static_cast<long double>(dn.size());
    row.base_count = static_cast<std::int64_t>(dn.size());
    row.added_count = static_cast<std::int64_t>(en.size());
    row.main_term = pairwise_sum(evaluate(dn, h, false)) / denom;
    row.second_term = pairwise_sum(evaluate(en, h, false)) / denom;
    row.bound = sup_abs * static_cast<long double>(en.size()) / denom;
    for (std::size_t i = 0; i < plan.records.size(); ++i) {
      const auto& c = plan.records[i].choice;
      const BigInt next = i + 1 < plan.records.size() ? plan.records[i + 1].choice.n : 2 * c.n + 1;
      if (N >= c.n && N < next) {
        const RootFactor g = perturbation_factor(c.u);
        const long double base = static_cast<long double>(to_double(Rational(g.num, g.den)));
        row.regime_bound = sup_abs * 2 * std::pow(base, 1 / plan.q.value());
      }
    }
    rep.rows.push_back(std::move(row));
  }
  for (const auto& r : plan.records) {
    TailRow t;
    t.k = r.choice.k;
    const BigInt radius = 2 * r.choice.n;
    if (fits_int64(radius) && s.added_in_cube(radius) <= point_budget()) {
      try {
        const auto en = added_points(to_int64(radius));
        t.value = pairwise_sum(evaluate(en, h, false)) / static_cast<long double>(to_double(r.choice.base_n));
        t.evaluated = true;
      } catch (const CapacityError&) {
        // h cannot be evaluated that far out
      }
    }
    rep.tail.push_back(t);
  }
  return rep;
}

Json GoodnessReport::to_json() const {
  Json r = Json::array();
  for (const auto& row : rows)
    r.push_back({{"N", to_string(row.N)},
                 {"D_N", to_string(row.base_count)},
                 {"added", to_string(row.added_count)},
                 {"main_term", static_cast<double>(row.main_term)},
                 {"second_term", static_cast<double>(row.second_term)},
                 {"bound", static_cast<double>(row.bound)},
                 {"regime_bound", row.regime_bound ? Json(static_cast<double>(*row.regime_bound)) : Json(nullptr)}});
  Json t = Json::array();
  for (const auto& row : tail)
    t.push_back({{"k", to_string(row.k)},
                 {"value", row.evaluated ? Json(static_cast<double>(row.value)) : Json(nullptr)}});
  return Json{{"rows", r}, {"tail", t}};
}

BallCubeAverage ball_vs_cube_average(const LatticeSet& s, const Orbit& h, std::int64_t N) {
  BallCubeAverage out;
  const auto cube = window_points(s, {WindowKind::Cube, N});
  const auto ball = window_points(s, {WindowKind::Ball, N});
  out.cube_count = static_cast<std::int64_t>(cube.size());
  out.ball_count = static_cast<std::int64_t>(ball.size());
  out.cube = pairwise_sum(evaluate(cube, h, false)) / static_cast<long double>(cube.size());
  out.ball = pairwise_sum(evaluate(ball, h, false)) / static_cast<long double>(ball.size());
  out.ratio = out.cube != 0 ? out.ball / out.cube : 0;
  return out;
}

AverageTrace divergence_trace(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f,
                              const std::vector<LatticePoint>& xs, long double threshold) {
  std::vector<BigInt> ks, radii;
  for (const auto* r : plan.block(f.u())) {
    ks.push_back(r->choice.k);
    radii.push_back(2 * r->choice.n);
  }
  const auto table = periodic_averages(s, f.periodic(), radii);
  AverageTrace trace;
  trace.mode = "maximal";
  for (const auto& x : xs) {
    long double running = 0;
    for (std::size_t w = 0; w < ks.size(); ++w) {
      TraceRow row;
      row.index = ks[w];
      row.count = table.totals[w];
      row.average = table.average(w, x[f.j()]);
      running = std::max(running, row.average);
      row.maximal = running;
      row.threshold = threshold;
      row.pass = running > threshold;
      row.x = x.to_string();
      trace.rows.push_back(std::move(row));
    }
  }
  return trace;
}

std::string format_real(long double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15Lg", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const AverageTrace& trace) {
  out << "k_or_N\twindow_kind\tcount\taverage\tmaximal\tthreshold\tpass\tx\n";
  for (const auto& r : trace.rows) {
    out << to_string(r.index) << '\t' << to_string(r.window) << '\t' << to_string(r.count) << '\t'
        << format_real(r.average) << '\t' << format_real(r.maximal) << '\t';
    if (r.threshold) {
      out << format_real(*r.threshold) << '\t' << (r.pass ? 1 : 0);
    } else {
      out << "NA\tNA";
    }
    out << '\t' << r.x << '\n';
  }
}

}  // namespace pertlab
