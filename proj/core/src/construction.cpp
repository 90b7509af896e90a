#include "pertlab/construction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace pertlab {

std::string to_string(Regime r) { return r == Regime::T1 ? "T1" : "T2"; }

Regime parse_regime(const std::string& text) {
  if (text == "T1" || text == "t1") return Regime::T1;
  if (text == "T2" || text == "t2") return Regime::T2;
  throw DomainError("unknown regime: " + text);
}

int block_of(const BigInt& k) {
  if (k < 2) throw DomainError("block index k must be >= 2");
  return static_cast<int>(boost::multiprecision::msb(k));
}

RootFactor quota_factor(Regime regime, int u) {
  const auto uu = static_cast<std::uint64_t>(u);
  if (regime == Regime::T1) return {BigInt(u), pow2(uu)};
  return {BigInt(1), BigInt(u) * u * pow2(uu)};
}

RootFactor perturbation_factor(int u) { return quota_factor(Regime::T1, u); }

BigInt quota_for(Regime regime, int u, Exponent q, const BigInt& base_count) {
  const RootFactor f = quota_factor(regime, u);
  return ceil_scaled_root(base_count, f.num, f.den, q);
}

void validate_config(const ConstructionConfig& c) {
  if (!c.base) throw DomainError("construction needs a base set");
  validate_dim(c.d);
  if (c.base->dim() != c.d) throw DomainError("base set dimension differs from d");
  if (c.q.num < 1 || c.q.den < 1) throw DomainError("q must be a positive rational");
  if (c.q < Exponent{1, 1}) throw DomainError("q must be >= 1");
  if (c.regime == Regime::T2 && c.q <= Exponent{1, 1}) throw DomainError("regime T2 needs q > 1");
  if (c.p) {
    if (*c.p < Exponent{1, 1}) throw DomainError("p must be >= 1");
    if (c.regime == Regime::T1 && *c.p <= c.q) throw DomainError("regime T1 needs p > q");
    if (c.regime == Regime::T2 && c.q <= *c.p) throw DomainError("regime T2 needs p < q");
  }
  if (c.u_min < 1 || c.u_max < c.u_min) throw DomainError("need 1 <= u_min <= u_max");
  if (c.u_max > 20) throw DomainError("u_max above 20 is not supported");
  if (c.radius_cap < 1) throw DomainError("radius_cap must be positive");
}

// --- running minima -----------------------------------------------------------

RunningMinima::RunningMinima(SetPtr set) : set_(std::move(set)) {}

std::optional<BigInt> RunningMinima::next(const BigInt& from, const BigInt& cap) {
  if (set_->closed_form_minima()) return set_->next_fresh_minimum(from, cap);
  auto it = std::lower_bound(found_.begin(), found_.end(), from);
  if (it != found_.end()) {
    if (*it <= cap) return *it;
    return std::nullopt;
  }
  while (last_ < cap) {
    if (scanned_ >= point_budget()) return std::nullopt;
    const BigInt m = last_ + 1;
    const BigInt count = set_->count_in_cube(m);
    const BigInt cube = cube_count_big(m, set_->dim());
    ++scanned_;
    last_ = m;
    if (!best_cube_ || count * *best_cube_ < best_count_ * cube) {
      best_cube_ = cube;
      best_count_ = count;
      found_.push_back(m);
      if (m >= from) return m;
    }
  }
  return std::nullopt;
}

std::vector<BigInt> select_mj(SetPtr base, std::size_t count, const BigInt& cap) {
  RunningMinima minima(std::move(base));
  std::vector<BigInt> out;
  BigInt from = 1;
  while (out.size() < count) {
    auto m = minima.next(from, cap);
    if (!m) {
      throw Error("insufficient sparseness: only " + std::to_string(out.size()) + " running minima below " +
                  to_string(cap) + ", " + std::to_string(count) + " requested");
    }
    out.push_back(*m);
    from = *m + 1;
  }
  return out;
}

// --- n_k selection ------------------------------------------------------------

ShellProgression admissible_shells(const BigInt& k, int u, const BigInt& n_k) {
  const BigInt modulus = pow2(static_cast<std::uint64_t>(u));
  ShellProgression p;
  p.step = modulus;
  p.first = n_k + mod_floor(k - n_k, modulus);
  if (n_k < 0 || p.first > 2 * n_k) {
    p.count = 0;
    return p;
  }
  p.count = (2 * n_k - p.first) / modulus + 1;
  return p;
}

namespace {

using NextCandidate = std::function<std::optional<BigInt>(const BigInt&)>;

// smallest x >= lo with pred(x); pred monotone
template <class Pred>
BigInt least_satisfying(BigInt lo, Pred pred, const BigInt& limit) {
  if (pred(lo)) return lo;
  BigInt step = 1;
  BigInt hi = lo + step;
  while (!pred(hi)) {
    lo = hi;
    step <<= 1;
    hi = lo + step;
    if (hi > limit) {
      if (!pred(limit)) return limit + 1;
      hi = limit;
      break;
    }
  }
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) >> 1;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

NkSelection select_nk_impl(const ConstructionConfig& c, const NextCandidate& next) {
  validate_config(c);
  WindowCountTable counts(c.base);
  const BigInt three_d = pow_big(3, static_cast<std::uint64_t>(c.d));
  const BigInt count_limit = cube_count_big(c.radius_cap, c.d);

  NkSelection sel;
  BigInt prev_n = 0;
  BigInt prefix_base = 0;   // Σ_{i<k} #D_{n_i}
  BigInt prefix_quota = 0;  // Σ_{i<k} #E_i
  for (int u = c.u_min; u <= c.u_max; ++u) {
    const UBlock block{u};
    const RootFactor pf = perturbation_factor(u);
    const RootFactor qf = quota_factor(c.regime, u);
    const BigInt u2u = BigInt(u) * block.first();
    for (BigInt k = block.first(); k <= block.last(); ++k) {
      BigInt from = 2 * (2 * prev_n + 1);
      std::string last_failure;
      while (true) {
        const auto m = next(from);
        if (!m) {
          std::ostringstream os;
          os << "exhausted m_seq at k = " << k << " (u = " << u << ")";
          if (last_failure.empty()) {
            os << ": no candidate radius in [" << from << ", " << c.radius_cap << "]";
          } else {
            os << ": first unsatisfiable condition '" << last_failure << "'";
          }
          throw Error(os.str());
        }
        ++sel.candidates;
        const BigInt n = *m / 2;
        auto reject = [&](const std::string& condition, const BigInt& resume) {
          sel.skips.push_back({k, condition, *m, resume});
          last_failure = condition;
          from = resume;
        };
        const BigInt dn = counts.cube(n);
        if (!(u2u * dn < n)) {
          reject("bigenough", *m + 1);
          continue;
        }
        const BigInt d2n = counts.cube(2 * n);
        if (!(d2n < three_d * dn)) {
          reject("sparse", *m + 1);
          continue;
        }
        auto pert_ok = [&](const BigInt& x) { return less_than_scaled_root(prefix_base, x, pf.num, pf.den, c.q); };
        auto round_ok = [&](const BigInt& x) {
          return at_most_scaled_root(prefix_quota + 1, x, qf.num, qf.den, c.q);
        };
        const bool pert = pert_ok(dn);
        if (!pert || !round_ok(dn)) {
          // both sides grow with #D_n; jump to the first radius with a large
          // enough count
          const BigInt need = least_satisfying(
              dn + 1, [&](const BigInt& x) { return pert_ok(x) && round_ok(x); },
              count_limit);
          const BigInt n_need = least_satisfying(
              n + 1, [&](const BigInt& r) { return counts.cube(r) >= need; }, c.radius_cap);
          const BigInt resume = std::max<BigInt>(*m + 1, 2 * n_need);
          reject(pert ? "rounding" : "perturbation", resume);
          continue;
        }
        const BigInt quota = ceil_scaled_root(dn, qf.num, qf.den, c.q);
        const ShellProgression shells = admissible_shells(k, u, n);
        if (shells.count == 0) {
          reject("shells", *m + 1);
          continue;
        }
        const BigInt capacity = shells.count * shell_count_big(shells.first, c.d) - (d2n - counts.cube(n - 1));
        if (capacity < quota) {
          reject("capacity", *m + 1);
          continue;
        }
        sel.choices.push_back({k, u, *m, n, dn, d2n, quota});
        prefix_base += dn;
        prefix_quota += quota;
        prev_n = n;
        break;
      }
    }
  }
  return sel;
}

}  // namespace

NkSelection select_nk(const ConstructionConfig& config) {
  validate_config(config);
  RunningMinima minima(config.base);
  const BigInt cap = config.radius_cap;
  return select_nk_impl(config, [&](const BigInt& from) { return minima.next(from, cap); });
}

NkSelection select_nk(const ConstructionConfig& config, const std::vector<BigInt>& m_seq) {
  return select_nk_impl(config, [&](const BigInt& from) -> std::optional<BigInt> {
    auto it = std::lower_bound(m_seq.begin(), m_seq.end(), from);
    if (it == m_seq.end() || *it > config.radius_cap) return std::nullopt;
    return *it;
  });
}

// --- E_k ------------------------------------------------------------------------

BigInt AddedSet::allocation(const BigInt& shell_index) const {
  if (shell_index < 0 || shell_index >= shells.count) return 0;
  return quota / shells.count + (shell_index < quota % shells.count ? 1 : 0);
}

BigInt AddedSet::allocated_in_first(const BigInt& shells_taken) const {
  if (shells.count == 0) return 0;
  const BigInt t = std::min(shells_taken, shells.count);
  const BigInt r = quota % shells.count;
  return t * (quota / shells.count) + std::min(t, r);
}

void AddedSet::index() {
  sorted_ = points;
  std::sort(sorted_.begin(), sorted_.end());
  linf_.clear();
  linf_.reserve(points.size());
  for (const auto& p : points) linf_.push_back(p.linf());
  std::sort(linf_.begin(), linf_.end());
}

namespace {

bool in_progression(const ShellProgression& p, const BigInt& m) {
  return p.count > 0 && m >= p.first && m <= p.last() && mod_floor(m - p.first, p.step) == 0;
}

BigInt ceil_div(const BigInt& a, const BigInt& b) { return (a + b - 1) / b; }

}  // namespace

bool AddedSet::contains(const LatticePoint& x) const {
  if (x.dim() != dim) return false;
  if (!symbolic()) return std::binary_search(sorted_.begin(), sorted_.end(), x);
  const BigInt m(x[0]);
  if (m < 1 || BigInt(x.linf()) != m || !in_progression(shells, m)) return false;
  for (int i = 1; i + 1 < dim; ++i)
    if (x[i] != -x[0]) return false;
  const BigInt slot = BigInt(x[dim - 1]) + m;
  return slot < allocation((m - shells.first) / shells.step);
}

BigInt AddedSet::count_in_cube(const BigInt& radius) const {
  if (radius < 0) return 0;
  if (!symbolic()) {
    if (radius > std::numeric_limits<std::uint64_t>::max()) return BigInt(points.size());
    const auto r = static_cast<std::uint64_t>(radius);
    return BigInt(std::upper_bound(linf_.begin(), linf_.end(), r) - linf_.begin());
  }
  return allocated_in_first(shells.terms_up_to(radius));
}

BigInt AddedSet::count_in_ball(const BigInt& radius) const {
  if (radius < 0) return 0;
  if (!symbolic()) {
    BigInt c = 0;
    const BigInt r2 = radius * radius;
    for (const auto& p : points) {
      BigInt n2 = 0;
      for (auto v : p.coords()) n2 += BigInt(v) * v;
      if (n2 <= r2) ++c;
    }
    return c;
  }
  const BigInt per = ceil_div(quota, shells.count);
  if (per <= 1) {
    // points (m, -m, ..., -m): ‖x‖² = d·m²
    const BigInt reach = iroot(radius * radius / dim, 2);
    return allocated_in_first(shells.terms_up_to(reach));
  }
  if (radius < shells.first) return 0;
  if (radius * radius >= BigInt(dim) * shells.last() * shells.last()) return quota;
  throw CapacityError("ball count of a symbolic E_k that straddles the window");
}

void AddedSet::add_residues(ResidueHistogram& hist, const BigInt& radius) const {
  const std::int64_t mod = hist.modulus;
  if (!symbolic()) {
    for (const auto& p : points)
      if (BigInt(p.linf()) <= radius) hist.add(p);
    return;
  }
  const BigInt taken = shells.terms_up_to(radius);
  if (taken == 0) return;
  // m = first + i·step has a residue that repeats with period P in i
  const BigInt g = boost::multiprecision::gcd(mod_floor(shells.step, mod), BigInt(mod));
  const BigInt period = g == 0 ? BigInt(1) : BigInt(mod) / g;
  const BigInt base_alloc = quota / shells.count;
  const BigInt extra_end = std::min(taken, quota % shells.count);  // shells [0, extra_end) hold one more
  for (BigInt rho = 0; rho < period; ++rho) {
    const std::int64_t m_res = static_cast<std::int64_t>(mod_floor(shells.first + rho * shells.step, mod));
    const std::pair<BigInt, BigInt> groups[2] = {
        {count_congruent(0, extra_end - 1, rho, period), base_alloc + 1},
        {count_congruent(extra_end, taken - 1, rho, period), base_alloc},
    };
    for (const auto& [nshells, c] : groups) {
      if (nshells == 0 || c == 0) continue;
      std::vector<std::int64_t> r(static_cast<std::size_t>(dim), 0);
      r[0] = m_res;
      for (int i = 1; i + 1 < dim; ++i) r[static_cast<std::size_t>(i)] = residue_of(-m_res, mod);
      // last coordinate runs over -m, ..., -m + c - 1
      for (std::int64_t y = 0; y < mod; ++y) {
        const BigInt hits = count_congruent(0, c - 1, mod_floor(BigInt(y) + m_res, mod), mod);
        if (hits == 0) continue;
        r[static_cast<std::size_t>(dim - 1)] = y;
        hist.add_residue(r, hits * nshells);
      }
    }
  }
}

std::vector<LatticePoint> AddedSet::points_in_cube(const BigInt& radius) const {
  if (!symbolic()) {
    std::vector<LatticePoint> out;
    for (const auto& p : sorted_)
      if (BigInt(p.linf()) <= radius) out.push_back(p);
    return out;
  }
  const BigInt total = count_in_cube(radius);
  require_budget(total, "listing a symbolic E_k");
  std::vector<LatticePoint> out;
  const BigInt taken = shells.terms_up_to(radius);
  for (BigInt i = 0; i < taken; ++i) {
    const BigInt c = allocation(i);
    if (c == 0) break;
    const std::int64_t m = to_int64(shells.at(i));
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(c); ++t)
      out.push_back(preferred_face_point(m, dim, static_cast<std::uint64_t>(t)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Json AddedSet::to_json() const {
  Json j{{"k", to_string(k)},
         {"u", u},
         {"shells", {{"first", to_string(shells.first)}, {"step", to_string(shells.step)},
                     {"count", to_string(shells.count)}}},
         {"quota", to_string(quota)}};
  if (symbolic()) {
    j["representation"] = "row_prefix";
  } else {
    j["representation"] = "points";
    Json pts = Json::array();
    for (const auto& p : points) {
      Json c = Json::array();
      for (auto v : p.coords()) c.push_back(v);
      pts.push_back(std::move(c));
    }
    j["points"] = std::move(pts);
  }
  return j;
}

AddedSet AddedSet::from_json(const Json& j, int dim) {
  AddedSet e;
  e.k = parse_bigint(j.at("k").get<std::string>());
  e.u = j.at("u").get<int>();
  e.dim = dim;
  const Json& s = j.at("shells");
  e.shells.first = parse_bigint(s.at("first").get<std::string>());
  e.shells.step = parse_bigint(s.at("step").get<std::string>());
  e.shells.count = parse_bigint(s.at("count").get<std::string>());
  e.quota = parse_bigint(j.at("quota").get<std::string>());
  const std::string rep = j.value("representation", std::string("points"));
  if (rep == "points") {
    for (const auto& p : j.at("points")) e.points.emplace_back(p.get<std::vector<std::int64_t>>());
  } else if (rep == "row_prefix") {
    e.prefix_rule = true;
  } else {
    throw DomainError("unknown E_k representation: " + rep);
  }
  e.index();
  return e;
}

namespace {

// Lazily walks one shell in the order used by build_Ek.
class ShellCursor {
 public:
  ShellCursor(const LatticeSet& base, std::int64_t m, int dim) : base_(base), m_(m), dim_(dim) {
    const BigInt f = preferred_face_size(m, dim);
    face_size_ = f > std::numeric_limits<std::uint64_t>::max() ? std::numeric_limits<std::uint64_t>::max()
                                                               : static_cast<std::uint64_t>(f);
  }

  std::optional<LatticePoint> next_preferred(std::uint64_t& visited) {
    while (face_next_ < face_size_) {
      ++visited;
      LatticePoint p = preferred_face_point(m_, dim_, face_next_++);
      if (!base_.contains(p)) return p;
    }
    return std::nullopt;
  }

  std::optional<LatticePoint> next_other(std::uint64_t& visited) {
    if (!rest_loaded_) {
      require_budget(shell_count_big(m_, dim_), "walking a shell for E_k");
      for_each_shell_point(m_, dim_, [&](const LatticePoint& x) {
        if (x[0] != m_ && !base_.contains(x)) rest_.push_back(x);
      });
      visited += rest_.size();
      rest_loaded_ = true;
    }
    if (rest_next_ < rest_.size()) return rest_[rest_next_++];
    return std::nullopt;
  }

 private:
  const LatticeSet& base_;
  std::int64_t m_;
  int dim_;
  std::uint64_t face_size_ = 0;
  std::uint64_t face_next_ = 0;
  bool rest_loaded_ = false;
  std::vector<LatticePoint> rest_;
  std::size_t rest_next_ = 0;
};

}  // namespace

constexpr std::uint64_t kListedPrefixMax = 4096;

AddedSet build_Ek(const LatticeSet& base, const BigInt& k, int u, const BigInt& n_k, const BigInt& quota,
                  std::uint64_t materialize_cap) {
  AddedSet e;
  e.k = k;
  e.u = u;
  e.dim = base.dim();
  e.shells = admissible_shells(k, u, n_k);
  e.quota = quota;
  if (quota == 0) return e;
  const int d = base.dim();
  const ShellProgression& sh = e.shells;
  if (sh.count == 0) throw CapacityError("capacity shortfall at k = " + to_string(k) + ": no admissible shell, deficit " + to_string(quota));

  const bool listable = quota <= materialize_cap && fits_int64(2 * n_k + 1);
  const BigInt per_shell = ceil_div(quota, sh.count);
  if (d >= 2 && per_shell <= 2 * sh.first + 1) {
    const auto hits = base.preferred_prefix_hits(sh, per_shell);
    if (hits && *hits == 0) {
      // large prefix sets stay symbolic; listing them only bloats plan files
      if (!listable || quota > kListedPrefixMax) {
        e.prefix_rule = true;
        return e;
      }
      for (BigInt i = 0; i < sh.count; ++i) {
        const BigInt c = e.allocation(i);
        if (c == 0) break;
        const std::int64_t m = to_int64(sh.at(i));
        for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(c); ++t)
          e.points.push_back(preferred_face_point(m, d, t));
      }
      e.index();
      return e;
    }
  }
  if (!listable) {
    throw CapacityError("E_k at k = " + to_string(k) + " needs " + to_string(quota) +
                        " points that can be neither listed nor described by the prefix rule");
  }

  const auto target = static_cast<std::uint64_t>(quota);
  std::map<BigInt, ShellCursor> cursors;
  auto cursor = [&](const BigInt& i) -> ShellCursor& {
    auto it = cursors.find(i);
    if (it == cursors.end()) it = cursors.emplace(i, ShellCursor(base, to_int64(sh.at(i)), d)).first;
    return it->second;
  };
  std::uint64_t visited = 0;
  for (int pass = 0; pass < 2 && e.points.size() < target; ++pass) {
    bool progress = true;
    while (progress && e.points.size() < target) {
      progress = false;
      for (BigInt i = 0; i < sh.count && e.points.size() < target; ++i) {
        auto p = pass == 0 ? cursor(i).next_preferred(visited) : cursor(i).next_other(visited);
        if (p) {
          e.points.push_back(std::move(*p));
          progress = true;
        }
        if (visited > point_budget()) throw CapacityError("building E_k exceeded the point budget");
      }
    }
  }
  if (e.points.size() < target) {
    throw CapacityError("capacity shortfall at k = " + to_string(k) + ": deficit " +
                        std::to_string(target - e.points.size()));
  }
  e.index();
  return e;
}

}  // namespace pertlab

namespace pertlab {

// --- plans ------------------------------------------------------------------

const PlanRecord* ConstructionPlan::find(const BigInt& k) const {
  for (const auto& r : records)
    if (r.choice.k == k) return &r;
  return nullptr;
}

std::vector<const PlanRecord*> ConstructionPlan::block(int u) const {
  std::vector<const PlanRecord*> out;
  for (const auto& r : records)
    if (r.choice.u == u) out.push_back(&r);
  return out;
}

Json ConstructionPlan::to_json() const {
  Json recs = Json::array();
  for (const auto& r : records) {
    const NkChoice& c = r.choice;
    Json j{{"k", to_string(c.k)},
           {"u", c.u},
           {"m_j", to_string(c.m)},
           {"n_k", to_string(c.n)},
           {"D_n_k", to_string(c.base_n)},
           {"D_2n_k", to_string(c.base_2n)},
           {"quota", to_string(c.quota)},
           {"E", r.added.to_json()}};
    recs.push_back(std::move(j));
  }
  Json skip = Json::array();
  for (const auto& s : skips)
    skip.push_back({{"k", to_string(s.k)}, {"condition", s.condition}, {"from", to_string(s.from)},
                    {"to", to_string(s.to)}});
  Json j{{"regime", to_string(regime)},
         {"q", q.to_string()},
         {"d", d},
         {"u_min", u_min},
         {"u_max", u_max},
         {"base", base->to_json()},
         {"candidates", candidates},
         {"records", std::move(recs)},
         {"skips", std::move(skip)}};
  j["p"] = p ? Json(p->to_string()) : Json(nullptr);
  return j;
}

ConstructionPlan ConstructionPlan::from_json(const Json& j) {
  ConstructionPlan plan;
  plan.regime = parse_regime(j.at("regime").get<std::string>());
  plan.q = Exponent::parse(j.at("q").get<std::string>());
  if (j.contains("p") && !j.at("p").is_null()) plan.p = Exponent::parse(j.at("p").get<std::string>());
  plan.d = j.at("d").get<int>();
  plan.u_min = j.at("u_min").get<int>();
  plan.u_max = j.at("u_max").get<int>();
  plan.base = parse_set(j.at("base"));
  plan.candidates = j.value("candidates", std::uint64_t{0});
  for (const auto& r : j.at("records")) {
    PlanRecord rec;
    rec.choice.k = parse_bigint(r.at("k").get<std::string>());
    rec.choice.u = r.at("u").get<int>();
    rec.choice.m = parse_bigint(r.at("m_j").get<std::string>());
    rec.choice.n = parse_bigint(r.at("n_k").get<std::string>());
    rec.choice.base_n = parse_bigint(r.at("D_n_k").get<std::string>());
    rec.choice.base_2n = parse_bigint(r.at("D_2n_k").get<std::string>());
    rec.choice.quota = parse_bigint(r.at("quota").get<std::string>());
    rec.added = AddedSet::from_json(r.at("E"), plan.d);
    plan.records.push_back(std::move(rec));
  }
  for (const auto& s : j.value("skips", Json::array()))
    plan.skips.push_back({parse_bigint(s.at("k").get<std::string>()), s.at("condition").get<std::string>(),
                          parse_bigint(s.at("from").get<std::string>()), parse_bigint(s.at("to").get<std::string>())});
  return plan;
}

ConstructionPlan build_plan(const ConstructionConfig& config) {
  NkSelection sel = select_nk(config);
  ConstructionPlan plan;
  plan.regime = config.regime;
  plan.q = config.q;
  plan.p = config.p;
  plan.d = config.d;
  plan.u_min = config.u_min;
  plan.u_max = config.u_max;
  plan.base = config.base;
  plan.skips = std::move(sel.skips);
  plan.candidates = sel.candidates;
  for (auto& c : sel.choices) {
    AddedSet e = build_Ek(*config.base, c.k, c.u, c.n, c.quota, config.materialize_cap);
    plan.records.push_back({std::move(c), std::move(e)});
  }
  return plan;
}

// --- S ------------------------------------------------------------------------

PerturbedSet::PerturbedSet(SetPtr base, std::vector<AddedSet> added) : base_(std::move(base)), added_(std::move(added)) {
  if (!base_) throw DomainError("perturbed set needs a base");
  for (auto& e : added_) {
    if (e.dim != base_->dim()) throw DomainError("E_k dimension differs from the base");
    e.index();
  }
}

bool PerturbedSet::contains(const LatticePoint& x) const {
  if (base_->contains(x)) return true;
  for (const auto& e : added_)
    if (e.contains(x)) return true;
  return false;
}

BigInt PerturbedSet::added_in_cube(const BigInt& radius) const {
  BigInt c = 0;
  for (const auto& e : added_) c += e.count_in_cube(radius);
  return c;
}

BigInt PerturbedSet::count_in_cube(const BigInt& radius) const {
  return base_->count_in_cube(radius) + added_in_cube(radius);
}

BigInt PerturbedSet::count_in_ball(const BigInt& radius) const {
  BigInt c = base_->count_in_ball(radius);
  for (const auto& e : added_) c += e.count_in_ball(radius);
  return c;
}

std::vector<LatticePoint> PerturbedSet::points_in_cube(std::int64_t radius) const {
  require_budget(count_in_cube(radius), "listing S");
  std::vector<LatticePoint> out = base_->points_in_cube(radius);
  for (const auto& e : added_) {
    auto pts = e.points_in_cube(radius);
    out.insert(out.end(), std::make_move_iterator(pts.begin()), std::make_move_iterator(pts.end()));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ResidueHistogram PerturbedSet::residues_in_cube(const BigInt& radius, std::int64_t modulus) const {
  ResidueHistogram h = base_->residues_in_cube(radius, modulus);
  for (const auto& e : added_) e.add_residues(h, radius);
  return h;
}

BigInt PerturbedSet::max_coordinate_in_cube(const BigInt& radius) const {
  BigInt best = base_->max_coordinate_in_cube(radius);
  for (const auto& e : added_) {
    if (e.count_in_cube(radius) == 0) continue;
    if (!e.symbolic()) {
      for (const auto& p : e.points)
        if (BigInt(p.linf()) <= radius) best = std::max(best, BigInt(p.linf()));
      continue;
    }
    BigInt last = std::min(e.shells.terms_up_to(radius), e.quota) - 1;
    best = std::max(best, e.shells.at(last));
  }
  return best;
}

Json PerturbedSet::to_json() const {
  Json added = Json::array();
  for (const auto& e : added_) added.push_back(e.to_json());
  return Json{{"dim", dim()}, {"kind", "perturbed"}, {"base", base_->to_json()}, {"added", std::move(added)}};
}

std::string PerturbedSet::describe() const {
  return base_->describe() + " perturbed by " + std::to_string(added_.size()) + " added sets";
}

std::shared_ptr<const PerturbedSet> assemble_S(const ConstructionPlan& plan) {
  std::vector<AddedSet> added;
  added.reserve(plan.records.size());
  for (const auto& r : plan.records) added.push_back(r.added);
  return std::make_shared<PerturbedSet>(plan.base, std::move(added));
}

Rational perturbation_ratio(const PerturbedSet& s, const LatticeSet& d, const BigInt& radius) {
  if (&d != &s.base()) return perturbation_ratio(static_cast<const LatticeSet&>(s), d, radius);
  const BigInt den = d.count_in_cube(radius);
  if (den == 0) throw DivisionByZeroError("perturbation ratio: D_N is empty at N = " + to_string(radius));
  return Rational(s.added_in_cube(radius), den);
}

SetPtr parse_set(const Json& spec) {
  if (spec.at("kind").get<std::string>() != "perturbed") return parse_base_set(spec);
  SetPtr base = parse_set(spec.at("base"));
  std::vector<AddedSet> added;
  for (const auto& e : spec.at("added")) added.push_back(AddedSet::from_json(e, base->dim()));
  return std::make_shared<PerturbedSet>(std::move(base), std::move(added));
}

// --- perturbation sup -------------------------------------------------------------

namespace {

long double root_factor_value(const RootFactor& f, Exponent q) {
  return std::pow(static_cast<long double>(to_double(Rational(f.num, f.den))),
                  static_cast<long double>(q.den) / static_cast<long double>(q.num));
}

}  // namespace

std::vector<PerturbationSup> perturbation_sups(const ConstructionPlan& plan, const PerturbedSet& s) {
  std::vector<PerturbationSup> out;
  WindowCountTable base_counts(s.base_ptr());
  std::map<BigInt, BigInt> added_memo;
  auto added = [&](const BigInt& n) -> const BigInt& {
    auto it = added_memo.find(n);
    if (it == added_memo.end()) it = added_memo.emplace(n, s.added_in_cube(n)).first;
    return it->second;
  };
  const std::uint64_t node_cap = 20'000'000;
  for (std::size_t idx = 0; idx < plan.records.size(); ++idx) {
    const NkChoice& c = plan.records[idx].choice;
    PerturbationSup r;
    r.k = c.k;
    r.u = c.u;
    r.lo = c.n;
    r.hi = idx + 1 < plan.records.size() ? plan.records[idx + 1].choice.n - 1 : 2 * c.n;
    if (base_counts.cube(r.lo) == 0)
      throw DivisionByZeroError("perturbation ratio: D_N is empty at N = " + to_string(r.lo));
    r.sup = Rational(added(r.lo), base_counts.cube(r.lo));
    r.argmax = r.lo;
    auto consider = [&](const BigInt& n, const Rational& v) {
      if (v > r.sup) {
        r.sup = v;
        r.argmax = n;
      }
    };
    std::vector<std::pair<BigInt, BigInt>> stack{{r.lo, r.hi}};
    while (!stack.empty()) {
      auto [a, b] = std::move(stack.back());
      stack.pop_back();
      if (++r.nodes > node_cap) throw CapacityError("perturbation sup search exceeded its node cap");
      const BigInt& na = added(a);
      const BigInt& nb = added(b);
      const BigInt da = base_counts.cube(a);
      const BigInt db = base_counts.cube(b);
      consider(a, Rational(na, da));
      consider(b, Rational(nb, db));
      // on [a, b] the ratio lies below nb/da; constant numerator puts the
      // max at a, constant denominator at b
      if (na == nb || da == db || b - a <= 1) continue;
      if (Rational(nb, da) <= r.sup) continue;
      const BigInt mid = (a + b) >> 1;
      stack.emplace_back(mid, b);
      stack.emplace_back(a, mid);
    }
    const RootFactor f = quota_factor(plan.regime, c.u);
    r.bound = 2 * root_factor_value(f, plan.q);
    const BigInt& sn = boost::multiprecision::numerator(r.sup);
    const BigInt& sd = boost::multiprecision::denominator(r.sup);
    r.within_bound = at_most_scaled_root(sn, 2 * sd, f.num, f.den, plan.q);
    out.push_back(std::move(r));
  }
  return out;
}

// --- verification -----------------------------------------------------------

namespace {

constexpr std::uint64_t kBruteForceCube = 2'000'000;

// #D_N recomputed along a route independent of the set's cube count:
// membership tests over R_N when small, otherwise a residue histogram total.
std::pair<BigInt, std::string> independent_count(const LatticeSet& set, const BigInt& radius) {
  const BigInt cube = cube_count_big(radius, set.dim());
  if (cube <= kBruteForceCube && cube <= point_budget()) {
    std::uint64_t c = 0;
    for_each_cube_point(to_int64(radius), set.dim(), [&](const LatticePoint& x) { c += set.contains(x) ? 1U : 0U; });
    return {BigInt(c), "membership scan"};
  }
  try {
    return {set.residues_in_cube(radius, 2).total(), "residue histogram"};
  } catch (const CapacityError&) {
    return {set.count_in_cube(radius), "window count"};
  }
}

void add_check(VerifyReport& rep, std::string name, std::optional<BigInt> k, bool pass, std::string detail) {
  rep.checks.push_back({std::move(name), std::move(k), pass, std::move(detail)});
}

}  // namespace

VerifyReport verify_plan(const ConstructionPlan& plan) {
  VerifyReport rep;
  if (!plan.base) throw DomainError("plan without a base set");
  const LatticeSet& base = *plan.base;
  const int d = plan.d;
  const BigInt three_d = pow_big(3, static_cast<std::uint64_t>(d));

  // coverage of the blocks, in order
  {
    std::vector<BigInt> expected;
    for (int u = plan.u_min; u <= plan.u_max; ++u)
      for (BigInt k = UBlock{u}.first(); k <= UBlock{u}.last(); ++k) expected.push_back(k);
    bool ok = expected.size() == plan.records.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = plan.records[i].choice.k == expected[i];
    add_check(rep, "coverage", std::nullopt, ok,
              std::to_string(plan.records.size()) + " records for " + std::to_string(expected.size()) + " indices");
  }

  BigInt prefix_base = 0;
  BigInt prefix_quota = 0;
  BigInt prev_n = 0;
  const PlanRecord* prev = nullptr;
  for (const auto& rec : plan.records) {
    const NkChoice& c = rec.choice;
    const AddedSet& e = rec.added;
    const int u = c.u;
    std::ostringstream os;

    add_check(rep, "block", c.k, c.k >= 2 && block_of(c.k) == u && e.k == c.k && e.u == u, "k in A_u");
    add_check(rep, "n_from_m", c.k, c.n == c.m / 2, "n_k = floor(m_j/2)");

    const auto [dn, route_n] = independent_count(base, c.n);
    const auto [d2n, route_2n] = independent_count(base, 2 * c.n);
    add_check(rep, "count_D_n", c.k, dn == c.base_n, "#D_n = " + to_string(dn) + " by " + route_n);
    add_check(rep, "count_D_2n", c.k, d2n == c.base_2n, "#D_2n = " + to_string(d2n) + " by " + route_2n);

    add_check(rep, "overlap", c.k, c.n > 2 * prev_n, "n_k > 2 n_{k-1}");
    const BigInt u2u = BigInt(u) * pow2(static_cast<std::uint64_t>(u));
    add_check(rep, "bigenough", c.k, u2u * dn < c.n, "u 2^u #D_n < n");
    add_check(rep, "sparse", c.k, d2n < three_d * dn, "#D_2n < 3^d #D_n");
    const RootFactor pf = perturbation_factor(u);
    add_check(rep, "perturbation", c.k, less_than_scaled_root(prefix_base, dn, pf.num, pf.den, plan.q),
              "sum of earlier #D_n = " + to_string(prefix_base));
    const RootFactor qf = quota_factor(plan.regime, u);
    add_check(rep, "rounding", c.k, at_most_scaled_root(prefix_quota + 1, dn, qf.num, qf.den, plan.q),
              "sum of earlier #E + 1 = " + to_string(prefix_quota + 1));
    // Q is the ceiling iff Q-1 < G·#D_n <= Q
    const bool quota_ok = c.quota >= 0 && c.quota == e.quota &&
                          (c.quota == 0 ? dn == 0
                                        : less_than_scaled_root(c.quota - 1, dn, qf.num, qf.den, plan.q) &&
                                              !less_than_scaled_root(c.quota, dn, qf.num, qf.den, plan.q));
    add_check(rep, "quota", c.k, quota_ok, "quota " + to_string(c.quota));

    // admissible shells
    const BigInt modulus = pow2(static_cast<std::uint64_t>(u));
    bool shells_ok = e.shells.step == modulus && e.shells.count >= 1 && e.shells.first >= c.n &&
                     e.shells.first - modulus < c.n && mod_floor(e.shells.first - c.k, modulus) == 0 &&
                     e.shells.last() <= 2 * c.n && e.shells.last() + modulus > 2 * c.n;
    if (shells_ok && c.n <= 1'000'000) {
      BigInt scanned = 0;
      for (BigInt m = c.n; m <= 2 * c.n; ++m)
        if (mod_floor(m - c.k, modulus) == 0) {
          if (e.shells.at(scanned) != m) shells_ok = false;
          ++scanned;
        }
      shells_ok = shells_ok && scanned == e.shells.count;
    }
    add_check(rep, "shells", c.k, shells_ok, "first " + to_string(e.shells.first) + ", count " + to_string(e.shells.count));

    // E_k itself
    if (e.symbolic()) {
      const BigInt per = (e.quota + e.shells.count - 1) / e.shells.count;
      add_check(rep, "quota_count", c.k, e.allocated_in_first(e.shells.count) == e.quota, "prefix rule");
      add_check(rep, "E_shells", c.k, d >= 2 && per <= 2 * e.shells.first + 1, "per-shell allocation " + to_string(per));
      const auto hits = base.preferred_prefix_hits(e.shells, per);
      add_check(rep, "E_avoids_D", c.k, hits && *hits == 0,
                hits ? to_string(*hits) + " base points in the prefixes" : std::string("undecidable within budget"));
    } else {
      add_check(rep, "quota_count", c.k, BigInt(e.points.size()) == e.quota, std::to_string(e.points.size()) + " points");
      bool in_shells = true;
      bool avoids = true;
      for (const auto& p : e.points) {
        const BigInt m(p.linf());
        if (m < c.n || m > 2 * c.n || mod_floor(m - c.k, modulus) != 0) in_shells = false;
        if (base.contains(p)) avoids = false;
      }
      add_check(rep, "E_shells", c.k, in_shells, "every point on an admissible shell");
      add_check(rep, "E_avoids_D", c.k, avoids, "no point of D");
      auto sorted = e.points;
      std::sort(sorted.begin(), sorted.end());
      add_check(rep, "E_distinct", c.k, std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                "no repeated point");
    }
    if (prev) {
      add_check(rep, "disjoint", c.k, 2 * prev->choice.n < c.n && prev->added.shells.last() < e.shells.first,
                "annuli of consecutive blocks are disjoint");
    }

    prefix_base += dn;
    prefix_quota += c.quota;
    prev_n = c.n;
    prev = &rec;
  }

  const auto s = assemble_S(plan);
  // brute-force agreement of #S_N on small windows
  for (const auto& rec : plan.records) {
    for (const BigInt& n : {rec.choice.n, 2 * rec.choice.n}) {
      if (cube_count_big(n, d) > kBruteForceCube) continue;
      std::uint64_t direct = 0;
      for_each_cube_point(to_int64(n), d, [&](const LatticePoint& x) { direct += s->contains(x) ? 1U : 0U; });
      add_check(rep, "count_S", rec.choice.k, BigInt(direct) == s->count_in_cube(n), "#S_N at N = " + to_string(n));
    }
  }

  rep.sups = perturbation_sups(plan, *s);
  BigInt running_base = 0;
  for (std::size_t i = 0; i < rep.sups.size(); ++i) {
    const auto& sup = rep.sups[i];
    const NkChoice& c = plan.records[i].choice;
    add_check(rep, "perturbation_sup", sup.k, sup.within_bound,
              "sup " + std::to_string(to_double(sup.sup)) + " at N = " + to_string(sup.argmax) + ", bound " +
                  std::to_string(static_cast<double>(sup.bound)));
    const BigInt worst = s->added_in_cube(sup.hi);
    add_check(rep, "added_count", sup.k, worst <= c.quota + running_base,
              "#(S_N \\ D_N) = " + to_string(worst) + " against " + to_string(c.quota + running_base));
    running_base += c.base_n;
    auto it = rep.sup_by_u.find(sup.u);
    if (it == rep.sup_by_u.end() || sup.sup > it->second) rep.sup_by_u[sup.u] = sup.sup;
  }
  rep.monotone_decreasing = true;
  for (auto it = rep.sup_by_u.begin(); it != rep.sup_by_u.end(); ++it) {
    auto nx = std::next(it);
    if (nx != rep.sup_by_u.end() && !(nx->second < it->second)) rep.monotone_decreasing = false;
  }
  add_check(rep, "perturbation_decreasing", std::nullopt, rep.monotone_decreasing, "block sups strictly decrease in u");

  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CheckResult& c) { return c.pass; });
  return rep;
}

Json VerifyReport::to_json() const {
  Json checks_j = Json::array();
  for (const auto& c : checks)
    checks_j.push_back({{"name", c.name}, {"k", c.k ? Json(to_string(*c.k)) : Json(nullptr)}, {"pass", c.pass},
                        {"detail", c.detail}});
  Json sups_j = Json::array();
  for (const auto& s : sups)
    sups_j.push_back({{"k", to_string(s.k)},
                      {"u", s.u},
                      {"lo", to_string(s.lo)},
                      {"hi", to_string(s.hi)},
                      {"sup", to_string(s.sup)},
                      {"sup_value", to_double(s.sup)},
                      {"argmax", to_string(s.argmax)},
                      {"bound", static_cast<double>(s.bound)},
                      {"within_bound", s.within_bound}});
  Json by_u = Json::object();
  for (const auto& [u, v] : sup_by_u) by_u[std::to_string(u)] = to_double(v);
  return Json{{"pass", pass}, {"perturbation_monotone_decreasing", monotone_decreasing}, {"sup_by_u", by_u},
              {"checks", checks_j}, {"sups", sups_j}};
}

// --- series -------------------------------------------------------------------

SeriesBound lp_series_bound(Regime regime, Exponent q, std::optional<Exponent> p, int d, int u_max) {
  validate_dim(d);
  if (u_max < 1) throw DomainError("u_max must be >= 1");
  if (q < Exponent{1, 1}) throw DomainError("q must be >= 1");
  if (p && *p < Exponent{1, 1}) throw DomainError("p must be >= 1");
  SeriesBound sb;
  sb.regime = regime;
  long double sum = 0;
  if (regime == Regime::T1) {
    if (!p) throw DomainError("regime T1 series needs p");
    const long double r = static_cast<long double>(p->value()) / static_cast<long double>(q.value());
    const long double c = std::pow(3.0L, static_cast<long double>(d) * static_cast<long double>(p->value()));
    auto term = [&](long double u) { return c * std::pow(u, r) / std::pow(2.0L, u * (r - 1)); };
    sb.divergent = !(q < *p);
    for (int u = 1; u <= u_max; ++u) {
      sb.terms.push_back(term(u));
      sum += sb.terms.back();
      sb.partial_sums.push_back(sum);
    }
    if (!sb.divergent) {
      const long double big_u = u_max + 1;
      const long double rho = std::pow(1 + 1 / big_u, r) * std::pow(2.0L, -(r - 1));
      if (rho < 1) sb.tail_bound = term(big_u) / (1 - rho);
      long double tail = 0;
      for (long double u = big_u; u < big_u + 100000; u += 1) {
        const long double t = term(u);
        tail += t;
        if (t < 1e-21L * (sum + tail)) break;
      }
      sb.tail_estimate = tail;
      sb.limit_estimate = sum + tail;
    }
  } else {
    if (!(Exponent{1, 1} < q)) throw DomainError("regime T2 series needs q > 1");
    if (p && !(*p < q)) throw DomainError("regime T2 needs p < q");
    const long double c = std::pow(3.0L, static_cast<long double>(d) * static_cast<long double>(q.value()));
    for (int u = 1; u <= u_max; ++u) {
      sb.terms.push_back(c / (static_cast<long double>(u) * u));
      sum += sb.terms.back();
      sb.partial_sums.push_back(sum);
    }
    const long double big_u = u_max;
    sb.tail_bound = c / big_u;
    sb.tail_estimate = c * (1 / big_u - 1 / (2 * big_u * big_u) + 1 / (6 * big_u * big_u * big_u) -
                            1 / (30 * std::pow(big_u, 5.0L)));
    sb.limit_estimate = sum + *sb.tail_estimate;
  }
  return sb;
}

Json SeriesBound::to_json() const {
  Json j{{"regime", to_string(regime)}, {"divergent", divergent}};
  Json t = Json::array();
  Json ps = Json::array();
  for (auto v : terms) t.push_back(static_cast<double>(v));
  for (auto v : partial_sums) ps.push_back(static_cast<double>(v));
  j["terms"] = t;
  j["partial_sums"] = ps;
  auto opt = [](const std::optional<long double>& v) { return v ? Json(static_cast<double>(*v)) : Json(nullptr); };
  j["tail_bound"] = opt(tail_bound);
  j["tail_estimate"] = opt(tail_estimate);
  j["limit_estimate"] = opt(limit_estimate);
  return j;
}

}  // namespace pertlab
