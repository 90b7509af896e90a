#include "pertlab/witness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pertlab {

namespace {

long double pow2_frac(int u, Exponent r) {
  return std::pow(2.0L, static_cast<long double>(u) * static_cast<long double>(r.den) / static_cast<long double>(r.num));
}

std::int64_t modulus_of(int u) {
  if (u < 1 || u > 24) throw DomainError("witness block index u out of range");
  return std::int64_t{1} << u;
}

}  // namespace

long double phi_eval(int u, Exponent r, const LatticePoint& x) {
  const std::int64_t m = modulus_of(u);
  for (auto c : x.coords())
    if (residue_of(c, m) != 0) return 0;
  return pow2_frac(u, r);
}

PeriodicFunction PeriodicFunction::zero(int dim, std::int64_t modulus) {
  return PeriodicFunction{dim, modulus, 0, std::vector<long double>(static_cast<std::size_t>(modulus), 0)};
}

// --- pigeonhole -------------------------------------------------------------------

std::vector<BigInt> coordinate_tallies(const AddedSet& e, int u) {
  const std::int64_t m = modulus_of(u);
  ResidueHistogram h{e.dim, m, {}};
  if (e.quota > 0) e.add_residues(h, e.shells.last());
  const std::int64_t target = static_cast<std::int64_t>(mod_floor(e.k, m));
  std::vector<BigInt> out(static_cast<std::size_t>(e.dim), BigInt(0));
  for (const auto& [r, c] : h.bins)
    for (int j = 0; j < e.dim; ++j)
      if (r[static_cast<std::size_t>(j)] == target) out[static_cast<std::size_t>(j)] += c;
  return out;
}

PigeonholeResult pigeonhole_Hj(const ConstructionPlan& plan, int u) {
  const auto recs = plan.block(u);
  const UBlock block{u};
  if (BigInt(recs.size()) != block.size()) throw DomainError("plan does not cover A_" + std::to_string(u));
  PigeonholeResult res;
  std::vector<std::size_t> freq(static_cast<std::size_t>(plan.d), 0);
  for (const auto* r : recs) {
    auto tallies = coordinate_tallies(r->added, u);
    int best = 0;
    for (int j = 1; j < plan.d; ++j)
      if (tallies[static_cast<std::size_t>(j)] > tallies[static_cast<std::size_t>(best)]) best = j;
    res.j_of_k[r->choice.k] = best;
    res.counts[r->choice.k] = std::move(tallies);
    ++freq[static_cast<std::size_t>(best)];
  }
  res.j = static_cast<int>(std::max_element(freq.begin(), freq.end()) - freq.begin());
  for (const auto& [k, j] : res.j_of_k)
    if (j == res.j) res.H.push_back(k);

  if (BigInt(res.H.size()) * plan.d < block.size()) {
    throw Error("pigeonhole failure: #H = " + std::to_string(res.H.size()) + " below 2^u/d");
  }
  for (const auto& h : res.H) {
    const PlanRecord* r = plan.find(h);
    const BigInt& ej = res.counts[h][static_cast<std::size_t>(res.j)];
    if (BigInt(plan.d) * ej < r->choice.quota) {
      throw Error("pigeonhole failure: #E_{" + to_string(h) + ",j} = " + to_string(ej) + " below quota/d");
    }
  }
  return res;
}

// --- f ------------------------------------------------------------------------------

WitnessFunction::WitnessFunction(int u, Exponent r, int d, int j, std::vector<BigInt> H, std::vector<std::int64_t> shifts)
    : u_(u), r_(r), d_(d), j_(j), H_(std::move(H)), shifts_(std::move(shifts)), modulus_(modulus_of(u)) {
  validate_dim(d);
  if (j < 0 || j >= d) throw DomainError("witness coordinate out of range");
  if (static_cast<int>(shifts_.size()) != d) throw DomainError("need one map π_i per coordinate");
  for (auto& s : shifts_) s = residue_of(s, modulus_);
  if (shifts_[0] != 0) throw DomainError("π_0 must be the identity");
  for (const auto& h : H_)
    if (!UBlock{u}.contains(h)) throw DomainError("H must lie in A_u");
  active_.assign(static_cast<std::size_t>(modulus_), -1);
  for (std::int64_t t = 0; t < modulus_; ++t)
    for (int i = 0; i < d; ++i)
      if (residue_of(t + shifts_[static_cast<std::size_t>(i)], modulus_) == 0) {
        active_[static_cast<std::size_t>(t)] = i;
        break;
      }
  f_ = PeriodicFunction{d, modulus_, j, std::vector<long double>(static_cast<std::size_t>(modulus_), 0)};
  for (std::int64_t t = 0; t < modulus_; ++t)
    if (active_[static_cast<std::size_t>(t)] >= 0) f_.values[static_cast<std::size_t>(t)] = level();
}

std::int64_t WitnessFunction::pi(int i, std::int64_t t) const {
  return residue_of(t + shifts_[static_cast<std::size_t>(i)], modulus_);
}

long double WitnessFunction::phi_i(int i, const LatticePoint& x) const {
  return active(residue_of(x[j_], modulus_)) == i ? pow2_frac(u_, r_) : 0;
}

long double WitnessFunction::operator()(const LatticePoint& x) const { return f_(x); }

long double WitnessFunction::level() const { return pow2_frac(u_, r_) / d_; }

Json WitnessFunction::to_json() const {
  Json h = Json::array();
  for (const auto& k : H_) h.push_back(to_string(k));
  return Json{{"u", u_},         {"r", r_.to_string()},       {"d", d_},
              {"j", j_ + 1},     {"H", h},                    {"pi_shifts", shifts_},
              {"level", static_cast<double>(level())}};
}

std::vector<std::int64_t> default_shifts(int u, int d) {
  const std::int64_t m = modulus_of(u);
  const std::int64_t s = (m + d - 1) / d;
  std::vector<std::int64_t> out(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = residue_of(i * s, m);
  return out;
}

WitnessFunction build_f(int u, Exponent r, int d, const std::vector<BigInt>& H, int j,
                        std::optional<std::vector<std::int64_t>> shifts) {
  return WitnessFunction(u, r, d, j, H, shifts ? *shifts : default_shifts(u, d));
}

// --- density budget ---------------------------------------------------------

DensityBudget density_budget(const PeriodicFunction& f, Exponent exponent, const std::vector<std::int64_t>& L_list,
                             long double explicit_c) {
  DensityBudget b;
  b.explicit_c = explicit_c;
  b.within_explicit = true;
  const long double e = static_cast<long double>(exponent.num) / static_cast<long double>(exponent.den);
  for (auto L : L_list) {
    if (L < 0) throw DomainError("window radius must be nonnegative");
    long double sum = 0;
    for (std::int64_t t = 0; t < f.modulus; ++t) {
      const long double v = std::fabs(f.values[static_cast<std::size_t>(t)]);
      if (v == 0) continue;
      sum += static_cast<long double>(to_double(count_congruent(-L, L, t, f.modulus))) * std::pow(v, e);
    }
    const long double value = sum / static_cast<long double>(2 * L + 1);
    b.rows.push_back({L, value});
    b.running_max = std::max(b.running_max, value);
    if (value > 1) b.measured_c = std::max(b.measured_c, static_cast<long double>(L) * (value - 1));
    if (value > 1 + explicit_c / std::max<long double>(L, 1) + 1e-15L) b.within_explicit = false;
  }
  return b;
}

long double density_budget_enumerated(const PeriodicFunction& f, Exponent exponent, std::int64_t L) {
  require_budget(cube_count_big(L, f.dim), "density budget enumeration");
  const long double e = static_cast<long double>(exponent.num) / static_cast<long double>(exponent.den);
  long double sum = 0;
  for_each_cube_point(L, f.dim, [&](const LatticePoint& x) {
    const long double v = std::fabs(f(x));
    if (v != 0) sum += std::pow(v, e);
  });
  return sum / static_cast<long double>(to_double(cube_count_big(L, f.dim)));
}

Json DensityBudget::to_json() const {
  Json r = Json::array();
  for (const auto& row : rows) r.push_back({{"L", row.L}, {"value", static_cast<double>(row.value)}});
  return Json{{"rows", r},
              {"running_max", static_cast<double>(running_max)},
              {"measured_c", static_cast<double>(measured_c)},
              {"explicit_c", static_cast<double>(explicit_c)},
              {"within_explicit", within_explicit}};
}

// --- cover ------------------------------------------------------------------------

ResidueCover residue_cover(int u, const std::vector<BigInt>& H, int j, const std::vector<std::int64_t>& shifts,
                           std::int64_t L, int d) {
  validate_dim(d);
  if (j < 0 || j >= d) throw DomainError("witness coordinate out of range");
  if (L < 0) throw DomainError("window radius must be nonnegative");
  const std::int64_t m = modulus_of(u);
  ResidueCover c;
  c.modulus = m;
  c.L = L;
  const BigInt slab = cube_count_big(L, d) / (2 * L + 1);
  std::vector<BigInt> per_residue(static_cast<std::size_t>(m));
  for (std::int64_t t = 0; t < m; ++t) {
    per_residue[static_cast<std::size_t>(t)] = count_congruent(-L, L, t, m);
    if (per_residue[static_cast<std::size_t>(t)] > 0) c.present.push_back(t);
  }
  std::vector<bool> covered(static_cast<std::size_t>(m), false);
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    std::vector<std::int64_t> hit;
    BigInt size = 0;
    for (auto t : c.present) {
      bool any = false;
      for (const auto& h : H)
        if (residue_of(t + static_cast<std::int64_t>(mod_floor(h, m)) + shifts[i], m) == 0) any = true;
      if (any) {
        hit.push_back(t);
        size += per_residue[static_cast<std::size_t>(t)] * slab;
        covered[static_cast<std::size_t>(t)] = true;
      }
    }
    c.by_map.push_back(std::move(hit));
    c.sizes.push_back(size);
  }
  std::vector<std::int64_t> gaps;
  c.union_size = 0;
  for (auto t : c.present) {
    if (covered[static_cast<std::size_t>(t)]) {
      c.union_size += per_residue[static_cast<std::size_t>(t)] * slab;
    } else {
      gaps.push_back(t);
    }
  }
  if (!gaps.empty()) {
    std::ostringstream os;
    os << "cover gap: residues of x_" << (j + 1) << " mod " << m << " not covered:";
    for (auto g : gaps) os << ' ' << g;
    throw DomainError(os.str());
  }
  return c;
}

std::vector<LatticePoint> residue_cover_points(const ResidueCover& cover, int i, int j, int d) {
  require_budget(cube_count_big(cover.L, d), "listing a cover set");
  const auto& hit = cover.by_map.at(static_cast<std::size_t>(i));
  std::vector<LatticePoint> out;
  for_each_cube_point(cover.L, d, [&](const LatticePoint& x) {
    if (std::binary_search(hit.begin(), hit.end(), residue_of(x[j], cover.modulus))) out.push_back(x);
  });
  return out;
}

// --- certification ----------------------------------------------------------

Exponent witness_exponent(const ConstructionPlan& plan) {
  if (plan.regime == Regime::T1) return plan.q;
  if (!plan.p) throw DomainError("regime T2 witness needs p");
  return *plan.p;
}

namespace {

struct BlockTable {
  BigInt k;
  BigInt total;                        // #S_{2n_k}
  std::vector<BigInt> active;          // per residue t of x_j: #{g ∈ S_{2n_k} : f(x+g) != 0}
  std::vector<BigInt> active_in_E;     // same over E_k
};

long double threshold_value(const ConstructionPlan& plan, int u, long double c_thr) {
  const long double uu = u;
  const long double q = plan.q.value();
  if (plan.regime == Regime::T1) return std::pow(uu, 1 / q) / c_thr;
  const long double p = plan.p->value();
  const long double gamma = (q - p) / (p * q);
  return std::pow(2.0L, gamma * uu) / (std::pow(uu, 2 / q) * c_thr);
}

std::vector<BigInt> active_counts(const std::vector<BigInt>& marginal, const WitnessFunction& f) {
  const std::int64_t m = f.modulus();
  std::vector<BigInt> out(static_cast<std::size_t>(m), BigInt(0));
  for (std::int64_t t = 0; t < m; ++t)
    for (std::int64_t y = 0; y < m; ++y)
      if (f.active(y) >= 0) out[static_cast<std::size_t>(t)] += marginal[static_cast<std::size_t>(residue_of(y - t, m))];
  return out;
}

}  // namespace

Certificate evaluate_divergence(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f,
                                std::int64_t audit_radius, std::size_t brute_force_samples) {
  const int u = f.u();
  const int d = plan.d;
  if (f.dim() != d) throw DomainError("witness dimension differs from the plan");
  if (plan.regime == Regime::T2 && (!plan.p || !(*plan.p < plan.q)))
    throw DomainError("regime T2 certification needs p < q");
  if (!(f.r() == witness_exponent(plan))) throw DomainError("witness exponent does not match the regime");
  const auto recs = plan.block(u);
  if (BigInt(recs.size()) != UBlock{u}.size()) throw DomainError("plan does not cover A_" + std::to_string(u));
  if (audit_radius < 0) throw DomainError("audit radius must be nonnegative");

  const std::int64_t m = f.modulus();
  const int j = f.j();
  const BigInt three_d = pow_big(3, static_cast<std::uint64_t>(d));
  const BigInt c_weak = BigInt(d) * d * three_d;
  const BigInt c_strong = BigInt(d) * three_d;
  const RootFactor g = quota_factor(plan.regime, u);

  Certificate cert;
  cert.regime = plan.regime;
  cert.u = u;
  cert.q = plan.q;
  cert.p = plan.p;
  cert.d = d;
  cert.j = j;
  cert.H = f.H();
  cert.audit_radius = audit_radius;
  cert.threshold = threshold_value(plan, u, static_cast<long double>(to_double(c_weak)));
  cert.threshold_strong = threshold_value(plan, u, static_cast<long double>(to_double(c_strong)));

  std::vector<BlockTable> tables;
  for (const auto* r : recs) {
    BlockTable t;
    t.k = r->choice.k;
    const BigInt radius = 2 * r->choice.n;
    const ResidueHistogram hist = s.residues_in_cube(radius, m);
    t.total = s.count_in_cube(radius);
    if (hist.total() != t.total) throw Error("residue histogram disagrees with the window count");
    if (t.total == 0) throw DivisionByZeroError("S_{2n_k} is empty");
    t.active = active_counts(hist.marginal(j), f);
    ResidueHistogram eh{d, m, {}};
    r->added.add_residues(eh, radius);
    t.active_in_E = active_counts(eh.marginal(j), f);
    tables.push_back(std::move(t));
  }

  // x_j residues present in R_L and their multiplicities
  std::vector<BigInt> weight(static_cast<std::size_t>(m));
  BigInt width = 2 * BigInt(audit_radius) + 1;
  for (std::int64_t t = 0; t < m; ++t) weight[static_cast<std::size_t>(t)] = count_congruent(-audit_radius, audit_radius, t, m);

  // exact test: level·a/S > threshold  ⟺  G·(d·S) < a·c_thr
  auto exceeds = [&](const BigInt& a, const BigInt& total, const BigInt& c_thr) {
    return !at_most_scaled_root(a * c_thr, BigInt(d) * total, g.num, g.den, plan.q);
  };

  BigInt pass_w = 0, strong_w = 0;
  bool first = true;
  std::int64_t worst_t = 0;
  cert.max_average_by_residue.assign(static_cast<std::size_t>(m), 0);
  cert.argmax_k_by_residue.assign(static_cast<std::size_t>(m), BigInt(0));
  for (std::int64_t t = 0; t < m; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    bool pass = false, strong = false;
    long double best = -1;
    for (const auto& tb : tables) {
      const long double avg = f.level() * static_cast<long double>(to_double(Rational(tb.active[ti], tb.total)));
      if (avg > best) {
        best = avg;
        cert.argmax_k_by_residue[ti] = tb.k;
      }
      pass = pass || exceeds(tb.active[ti], tb.total, c_weak);
      strong = strong || exceeds(tb.active[ti], tb.total, c_strong);
    }
    cert.max_average_by_residue[ti] = best;
    if (weight[ti] == 0) continue;
    if (pass) pass_w += weight[ti];
    if (strong) strong_w += weight[ti];
    if (first || best < cert.min_max_average) {
      cert.min_max_average = best;
      worst_t = t;
      first = false;
    }
  }
  cert.pass_fraction = Rational(pass_w, width);
  cert.strong_pass_fraction = Rational(strong_w, width);
  cert.pass = pass_w == width;
  cert.strong_pass = strong_w == width;
  cert.worst_x = LatticePoint(d);
  for (int i = 0; i < d; ++i) cert.worst_x[i] = -audit_radius;
  cert.worst_x[j] = -audit_radius + residue_of(worst_t + audit_radius, m);

  // the lower-bound chain at the k = h that covers each residue
  cert.chain_pass = true;
  for (std::int64_t t = 0; t < m; ++t) {
    if (weight[static_cast<std::size_t>(t)] == 0) continue;
    std::optional<BigInt> cover;
    for (int i = 0; i < d && !cover; ++i)
      for (const auto& h : f.H())
        if (f.pi(i, t + static_cast<std::int64_t>(mod_floor(h, m))) == 0) {
          cover = h;
          break;
        }
    if (!cover) {
      cert.chain_pass = false;
      continue;
    }
    const PlanRecord* r = plan.find(*cover);
    const BlockTable& tb = *std::find_if(tables.begin(), tables.end(), [&](const BlockTable& b) { return b.k == *cover; });
    const auto ti = static_cast<std::size_t>(t);
    const BigInt ej = coordinate_tallies(r->added, u)[static_cast<std::size_t>(j)];
    const BigInt denom = three_d * r->choice.base_n;
    ChainStep st;
    st.k = *cover;
    st.residue = t;
    st.average = f.level() * static_cast<long double>(to_double(Rational(tb.active[ti], tb.total)));
    st.e_average = f.level() * static_cast<long double>(to_double(Rational(tb.active_in_E[ti], denom)));
    st.ej_bound = f.level() * static_cast<long double>(to_double(Rational(ej, denom)));
    st.threshold = cert.threshold;
    st.first = tb.active[ti] * denom >= tb.active_in_E[ti] * tb.total;
    st.second = tb.active_in_E[ti] >= ej;
    st.third = !less_than_scaled_root(ej * c_weak, BigInt(d) * denom, g.num, g.den, plan.q);
    cert.chain_pass = cert.chain_pass && st.first && st.second && st.third;
    cert.chain.push_back(st);
  }

  // direct sums on a few points as an oracle for the residue route
  std::vector<std::int64_t> sample_t;
  for (std::int64_t t = 0; t < m && sample_t.size() < brute_force_samples; ++t)
    if (weight[static_cast<std::size_t>(t)] > 0) sample_t.push_back(t);
  if (brute_force_samples > 0 && std::find(sample_t.begin(), sample_t.end(), worst_t) == sample_t.end())
    sample_t.push_back(worst_t);
  for (const auto& tb : tables) {
    const PlanRecord* r = plan.find(tb.k);
    const BigInt radius = 2 * r->choice.n;
    if (tb.total > 2'000'000 || tb.total > point_budget() || radius + audit_radius > (BigInt(1) << 62)) continue;
    const auto pts = s.points_in_cube(to_int64(radius));
    for (auto t : sample_t) {
      LatticePoint x(d);
      for (int i = 0; i < d; ++i) x[i] = -audit_radius;
      x[j] = -audit_radius + residue_of(t + audit_radius, m);
      BigInt hits = 0;
      long double sum = 0;
      for (const auto& gpt : pts) {
        const long double v = std::fabs(f(x + gpt));
        if (v != 0) {
          ++hits;
          sum += v;
        }
      }
      ++cert.brute_force_points;
      if (hits != tb.active[static_cast<std::size_t>(t)]) cert.brute_force_agree = false;
      const long double residue_route = f.level() * static_cast<long double>(to_double(tb.active[static_cast<std::size_t>(t)]));
      if (residue_route > 0)
        cert.brute_force_max_error = std::max(cert.brute_force_max_error, std::fabs(sum - residue_route) / residue_route);
    }
  }
  return cert;
}

Certificate certify_divergence(const PerturbedSet& s, const ConstructionPlan& plan, const WitnessFunction& f,
                               std::int64_t audit_radius, std::size_t brute_force_samples) {
  Certificate cert = evaluate_divergence(s, plan, f, audit_radius, brute_force_samples);
  if (!cert.pass) {
    throw Error("divergence shortfall at x = " + cert.worst_x.to_string() + ": max average " +
                std::to_string(static_cast<double>(cert.min_max_average)) + " against threshold " +
                std::to_string(static_cast<double>(cert.threshold)));
  }
  return cert;
}

Json Certificate::to_json() const {
  Json h = Json::array();
  for (const auto& k : H) h.push_back(to_string(k));
  Json chain_j = Json::array();
  for (const auto& c : chain)
    chain_j.push_back({{"k", to_string(c.k)},
                       {"residue", c.residue},
                       {"average", static_cast<double>(c.average)},
                       {"e_average", static_cast<double>(c.e_average)},
                       {"ej_bound", static_cast<double>(c.ej_bound)},
                       {"threshold", static_cast<double>(c.threshold)},
                       {"steps", {c.first, c.second, c.third}}});
  Json by_res = Json::array();
  for (std::size_t t = 0; t < max_average_by_residue.size(); ++t)
    by_res.push_back({{"residue", t},
                      {"max_average", static_cast<double>(max_average_by_residue[t])},
                      {"argmax_k", to_string(argmax_k_by_residue[t])}});
  Json worst = Json::array();
  for (auto v : worst_x.coords()) worst.push_back(v);
  return Json{{"regime", to_string(regime)},
              {"u", u},
              {"q", q.to_string()},
              {"p", p ? Json(p->to_string()) : Json(nullptr)},
              {"d", d},
              {"j", j + 1},
              {"H", h},
              {"audit_radius", audit_radius},
              {"threshold", static_cast<double>(threshold)},
              {"threshold_strong", static_cast<double>(threshold_strong)},
              {"min_max_average", static_cast<double>(min_max_average)},
              {"pass_fraction", to_string(pass_fraction)},
              {"strong_pass_fraction", to_string(strong_pass_fraction)},
              {"worst_x", worst},
              {"pass", pass},
              {"strong_pass", strong_pass},
              {"max_average_by_residue", by_res},
              {"chain_pass", chain_pass},
              {"chain", chain_j},
              {"brute_force_points", brute_force_points},
              {"brute_force_agree", brute_force_agree},
              {"brute_force_max_rel_error", static_cast<double>(brute_force_max_error)}};
}

}  // namespace pertlab
