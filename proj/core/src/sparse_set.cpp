#include "pertlab/sparse_set.hpp"

#include "pertlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace pertlab {

namespace {

std::atomic<std::uint64_t> g_point_budget{50'000'000};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

// lexicographic index of (x_2, ..., x_d) within [-m, m]^{d-1}
BigInt face_index(const LatticePoint& x, std::int64_t m) {
  BigInt t = 0;
  const BigInt base = 2 * BigInt(m) + 1;
  for (int i = 1; i < x.dim(); ++i) t = t * base + (BigInt(x[i]) + m);
  return t;
}

std::uint64_t radius_as_u64(const BigInt& radius) {
  if (radius < 0) return 0;
  if (radius > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(radius);
}

std::uint64_t scaled_ball_count(int dims_left, unsigned __int128 remaining) {
  const std::int64_t reach = detail::isqrt_floor(remaining);
  if (dims_left == 1) return static_cast<std::uint64_t>(2 * reach + 1);
  std::uint64_t total = 0;
  for (std::int64_t v = -reach; v <= reach; ++v) {
    const auto a = static_cast<unsigned __int128>(v < 0 ? -v : v);
    total += scaled_ball_count(dims_left - 1, remaining - a * a);
  }
  return total;
}

}  // namespace

void set_point_budget(std::uint64_t points) { g_point_budget.store(points); }
std::uint64_t point_budget() { return g_point_budget.load(); }

void require_budget(const BigInt& points, const std::string& what) {
  if (points > point_budget()) {
    throw CapacityError(what + ": enumeration of " + to_string(points) +
                        " points exceeds the point budget of " + std::to_string(point_budget()));
  }
}

std::int64_t residue_of(std::int64_t value, std::int64_t modulus) {
  const std::int64_t r = value % modulus;
  return r < 0 ? r + modulus : r;
}

// --- ResidueHistogram -------------------------------------------------------

void ResidueHistogram::add(const LatticePoint& x, const BigInt& count) {
  std::vector<std::int64_t> r(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) r[static_cast<std::size_t>(i)] = residue_of(x[i], modulus);
  add_residue(std::move(r), count);
}

void ResidueHistogram::add_residue(std::vector<std::int64_t> residue, const BigInt& count) {
  if (count == 0) return;
  bins[std::move(residue)] += count;
}

void ResidueHistogram::merge(const ResidueHistogram& other) {
  if (other.dim != dim || other.modulus != modulus) throw DomainError("histogram shape mismatch");
  for (const auto& [r, c] : other.bins) bins[r] += c;
}

BigInt ResidueHistogram::total() const {
  BigInt t = 0;
  for (const auto& kv : bins) t += kv.second;
  return t;
}

std::vector<BigInt> ResidueHistogram::marginal(int coord) const {
  std::vector<BigInt> m(static_cast<std::size_t>(modulus), BigInt(0));
  for (const auto& [r, c] : bins) m[static_cast<std::size_t>(r[static_cast<std::size_t>(coord)])] += c;
  return m;
}

// --- ShellProgression -------------------------------------------------------

BigInt ShellProgression::terms_up_to(const BigInt& radius) const {
  if (count <= 0 || radius < first) return 0;
  const BigInt n = floor_div(radius - first, step) + 1;
  return n < count ? n : count;
}

LatticePoint preferred_face_point(std::int64_t m, int dim, std::uint64_t t) {
  LatticePoint x(dim);
  x[0] = m;
  const auto base = static_cast<std::uint64_t>(2 * m + 1);
  for (int pos = dim - 1; pos >= 1; --pos) {
    x[pos] = static_cast<std::int64_t>(t % base) - m;
    t /= base;
  }
  return x;
}

BigInt preferred_face_size(const BigInt& m, int dim) {
  return pow_big(2 * m + 1, static_cast<std::uint64_t>(dim - 1));
}

// --- LatticeSet defaults ----------------------------------------------------

BigInt LatticeSet::count_in_shell(const BigInt& index) const {
  if (index <= 0) return count_in_cube(0);
  return count_in_cube(index) - count_in_cube(index - 1);
}

std::vector<LatticePoint> LatticeSet::points_in_ball(std::int64_t radius) const {
  std::vector<LatticePoint> out;
  const BallWindow ball{radius, dim()};
  for (auto& p : points_in_cube(radius))
    if (ball.contains(p)) out.push_back(std::move(p));
  return out;
}

ResidueHistogram LatticeSet::residues_in_cube(const BigInt& radius, std::int64_t modulus) const {
  ResidueHistogram h{dim(), modulus, {}};
  for (const auto& p : points_in_cube(to_int64(radius))) h.add(p);
  return h;
}

BigInt LatticeSet::max_coordinate_in_cube(const BigInt& radius) const {
  std::uint64_t m = 0;
  for (const auto& p : points_in_cube(to_int64(radius))) m = std::max(m, p.linf());
  return BigInt(m);
}

std::optional<BigInt> LatticeSet::next_fresh_minimum(const BigInt&, const BigInt&) const {
  throw Error("next_fresh_minimum has no closed form for " + describe());
}

std::optional<BigInt> LatticeSet::preferred_prefix_hits(const ShellProgression& shells,
                                                        const BigInt& per_shell) const {
  if (shells.count == 0 || per_shell == 0) return BigInt(0);
  if (shells.count * per_shell > point_budget() || !fits_int64(2 * shells.last() + 1)) return std::nullopt;
  BigInt hits = 0;
  for (BigInt i = 0; i < shells.count; ++i) {
    const auto m = static_cast<std::int64_t>(shells.at(i));
    const BigInt face = preferred_face_size(m, dim());
    const auto take = static_cast<std::uint64_t>(per_shell < face ? per_shell : face);
    for (std::uint64_t t = 0; t < take; ++t)
      if (contains(preferred_face_point(m, dim(), t))) ++hits;
  }
  return hits;
}

// --- ExplicitSet ------------------------------------------------------------

ExplicitSet::ExplicitSet(int dim, std::vector<LatticePoint> points) : dim_(dim), points_(std::move(points)) {
  validate_dim(dim);
  for (const auto& p : points_)
    if (p.dim() != dim) throw DomainError("explicit set point " + p.to_string() + " has wrong dimension");
  std::sort(points_.begin(), points_.end());
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
  linf_.reserve(points_.size());
  n2_.reserve(points_.size());
  for (const auto& p : points_) {
    linf_.push_back(p.linf());
    n2_.push_back(p.norm2());
  }
  std::sort(linf_.begin(), linf_.end());
  std::sort(n2_.begin(), n2_.end());
}

bool ExplicitSet::contains(const LatticePoint& x) const {
  return std::binary_search(points_.begin(), points_.end(), x);
}

BigInt ExplicitSet::count_in_cube(const BigInt& radius) const {
  if (radius < 0) return 0;
  const auto r = radius_as_u64(radius);
  return BigInt(std::upper_bound(linf_.begin(), linf_.end(), r) - linf_.begin());
}

BigInt ExplicitSet::count_in_ball(const BigInt& radius) const {
  if (radius < 0) return 0;
  if (radius > std::numeric_limits<std::uint32_t>::max() * BigInt(4096)) return BigInt(points_.size());
  const auto r = static_cast<unsigned __int128>(static_cast<std::uint64_t>(radius));
  return BigInt(std::upper_bound(n2_.begin(), n2_.end(), r * r) - n2_.begin());
}

BigInt ExplicitSet::count_in_shell(const BigInt& index) const {
  if (index < 0) return 0;
  const auto r = radius_as_u64(index);
  auto range = std::equal_range(linf_.begin(), linf_.end(), r);
  return BigInt(range.second - range.first);
}

std::vector<LatticePoint> ExplicitSet::points_in_cube(std::int64_t radius) const {
  std::vector<LatticePoint> out;
  if (radius < 0) return out;
  for (const auto& p : points_)
    if (p.linf() <= static_cast<std::uint64_t>(radius)) out.push_back(p);
  return out;
}

ResidueHistogram ExplicitSet::residues_in_cube(const BigInt& radius, std::int64_t modulus) const {
  ResidueHistogram h{dim_, modulus, {}};
  const auto r = radius_as_u64(radius);
  if (radius < 0) return h;
  for (const auto& p : points_)
    if (p.linf() <= r) h.add(p);
  return h;
}

BigInt ExplicitSet::max_coordinate_in_cube(const BigInt& radius) const {
  if (radius < 0) return 0;
  const auto r = radius_as_u64(radius);
  auto it = std::upper_bound(linf_.begin(), linf_.end(), r);
  return it == linf_.begin() ? BigInt(0) : BigInt(*(it - 1));
}

std::optional<BigInt> ExplicitSet::preferred_prefix_hits(const ShellProgression& shells,
                                                         const BigInt& per_shell) const {
  BigInt hits = 0;
  if (shells.count == 0) return hits;
  for (const auto& p : points_) {
    const BigInt m(p.linf());
    if (p[0] != static_cast<std::int64_t>(p.linf()) || m < shells.first || m > shells.last()) continue;
    if (mod_floor(m - shells.first, shells.step) != 0) continue;
    if (face_index(p, p[0]) < per_shell) ++hits;
  }
  return hits;
}

Json ExplicitSet::to_json() const {
  Json pts = Json::array();
  for (const auto& p : points_) {
    Json c = Json::array();
    for (auto v : p.coords()) c.push_back(v);
    pts.push_back(std::move(c));
  }
  return Json{{"dim", dim_}, {"kind", "explicit"}, {"points", std::move(pts)}};
}

std::string ExplicitSet::describe() const {
  return "explicit set of " + std::to_string(points_.size()) + " points in Z^" + std::to_string(dim_);
}

// --- CubicRaySet ------------------------------------------------------------

CubicRaySet::CubicRaySet(int dim) : dim_(dim) { validate_dim(dim); }

bool CubicRaySet::contains(const LatticePoint& x) const {
  if (x.dim() != dim_ || x[0] < 1) return false;
  for (int i = 1; i < dim_; ++i)
    if (x[i] != 0) return false;
  const BigInt v(x[0]);
  const BigInt j = icbrt(v);
  return j * j * j == v;
}

BigInt CubicRaySet::count_in_cube(const BigInt& radius) const { return radius < 1 ? BigInt(0) : icbrt(radius); }

BigInt CubicRaySet::count_in_ball(const BigInt& radius) const { return count_in_cube(radius); }

std::vector<LatticePoint> CubicRaySet::points_in_cube(std::int64_t radius) const {
  const BigInt j_max = count_in_cube(radius);
  require_budget(j_max, "cubic ray enumeration");
  std::vector<LatticePoint> out;
  out.reserve(static_cast<std::size_t>(j_max));
  for (std::int64_t j = 1; j <= static_cast<std::int64_t>(j_max); ++j) {
    LatticePoint x(dim_);
    x[0] = j * j * j;
    out.push_back(std::move(x));
  }
  return out;
}

ResidueHistogram CubicRaySet::residues_in_cube(const BigInt& radius, std::int64_t modulus) const {
  if (modulus < 1 || modulus > (1 << 22)) throw DomainError("residue modulus out of range");
  ResidueHistogram h{dim_, modulus, {}};
  const BigInt j_max = count_in_cube(radius);
  for (std::int64_t j0 = 0; j0 < modulus; ++j0) {
    const BigInt c = count_congruent(1, j_max, j0, modulus);
    if (c == 0) continue;
    std::vector<std::int64_t> r(static_cast<std::size_t>(dim_), 0);
    const BigInt cube = BigInt(j0) * j0 * j0;
    r[0] = static_cast<std::int64_t>(mod_floor(cube, modulus));
    h.add_residue(std::move(r), c);
  }
  return h;
}

BigInt CubicRaySet::max_coordinate_in_cube(const BigInt& radius) const {
  const BigInt j = count_in_cube(radius);
  return j * j * j;
}

namespace {

// compares #D_a/#R_a < #D_b/#R_b for the cubic ray: da*(2b+1)^d < db*(2a+1)^d
bool cubic_density_less(const BigInt& a, const BigInt& b, int dim) {
  const auto d = static_cast<std::uint64_t>(dim);
  return icbrt(a) * pow_big(2 * b + 1, d) < icbrt(b) * pow_big(2 * a + 1, d);
}

}  // namespace

std::optional<BigInt> CubicRaySet::next_fresh_minimum(const BigInt& from, const BigInt& cap) const {
  // Within a block J³ <= m < (J+1)³ the count is constant, so the density
  // strictly decreases; the running minimum before the block is attained at
  // its predecessor J³-1. A radius is a fresh minimum iff its density is
  // below density(J³-1).
  BigInt m = from < 1 ? BigInt(1) : from;
  while (m <= cap) {
    const BigInt j = icbrt(m);
    if (j == 1) return m;
    const BigInt prev_end = j * j * j - 1;
    const BigInt block_end = (j + 1) * (j + 1) * (j + 1) - 1;
    if (cubic_density_less(m, prev_end, dim_)) return m;
    if (cubic_density_less(block_end, prev_end, dim_)) {
      BigInt lo = m, hi = block_end;  // lo fails, hi succeeds
      while (hi - lo > 1) {
        BigInt mid = (lo + hi) >> 1;
        if (cubic_density_less(mid, prev_end, dim_)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (hi <= cap) return hi;
      return std::nullopt;
    }
    m = block_end + 1;
  }
  return std::nullopt;
}

std::optional<BigInt> CubicRaySet::preferred_prefix_hits(const ShellProgression& shells,
                                                         const BigInt& per_shell) const {
  if (shells.count == 0 || per_shell == 0) return BigInt(0);
  // The point (m, 0, ..., 0) sits at face index ((2m+1)^{d-1} - 1)/2.
  auto center = [&](const BigInt& m) { return (preferred_face_size(m, dim_) - 1) / 2; };
  const BigInt j_lo = icbrt(shells.first - 1) + 1;
  const BigInt j_hi = icbrt(shells.last());
  if (j_hi < j_lo) return BigInt(0);
  if (dim_ >= 2) {
    if (center(shells.first) >= per_shell) return BigInt(0);
    if (j_hi - j_lo > point_budget()) return std::nullopt;
    BigInt hits = 0;
    for (BigInt j = j_lo; j <= j_hi; ++j) {
      const BigInt m = j * j * j;
      if (center(m) >= per_shell) break;
      if (mod_floor(m - shells.first, shells.step) == 0) ++hits;
    }
    return hits;
  }
  // d = 1: the face is the single point (m); count cubes j³ ≡ first (mod step).
  if (shells.step > (1 << 22)) return std::nullopt;
  const auto step = static_cast<std::int64_t>(shells.step);
  const BigInt target = mod_floor(shells.first, shells.step);
  BigInt hits = 0;
  for (std::int64_t j0 = 0; j0 < step; ++j0) {
    if (mod_floor(BigInt(j0) * j0 * j0, shells.step) != target) continue;
    hits += count_congruent(j_lo, j_hi, j0, step);
  }
  return hits;
}

Json CubicRaySet::to_json() const {
  return Json{{"dim", dim_}, {"kind", "rule"}, {"rule_name", "cubic_ray"}, {"params", Json::object()}};
}

std::string CubicRaySet::describe() const { return "cubic ray in Z^" + std::to_string(dim_); }

// --- FullLatticeSet ---------------------------------------------------------

FullLatticeSet::FullLatticeSet(int dim) : dim_(dim) { validate_dim(dim); }

bool FullLatticeSet::contains(const LatticePoint& x) const { return x.dim() == dim_; }

BigInt FullLatticeSet::count_in_cube(const BigInt& radius) const {
  return radius < 0 ? BigInt(0) : cube_count_big(radius, dim_);
}

BigInt FullLatticeSet::count_in_ball(const BigInt& radius) const {
  if (radius < 0) return 0;
  require_budget(pow_big(2 * radius + 1, static_cast<std::uint64_t>(dim_ - 1)), "ball count of Z^d");
  return BigInt(ball_count(to_int64(radius), dim_));
}

std::vector<LatticePoint> FullLatticeSet::points_in_cube(std::int64_t radius) const {
  require_budget(cube_count_big(radius, dim_), "enumeration of Z^d");
  return cube_points(radius, dim_);
}

BigInt FullLatticeSet::max_coordinate_in_cube(const BigInt& radius) const { return radius < 0 ? BigInt(0) : radius; }

// the density is identically 1, so only m = 1 is a fresh minimum
std::optional<BigInt> FullLatticeSet::next_fresh_minimum(const BigInt& from, const BigInt& cap) const {
  if (from <= 1 && cap >= 1) return BigInt(1);
  return std::nullopt;
}

Json FullLatticeSet::to_json() const {
  return Json{{"dim", dim_}, {"kind", "rule"}, {"rule_name", "full"}, {"params", Json::object()}};
}

std::string FullLatticeSet::describe() const { return "Z^" + std::to_string(dim_); }

// --- SublatticeSet ----------------------------------------------------------

SublatticeSet::SublatticeSet(int dim, std::int64_t stride) : dim_(dim), stride_(stride) {
  validate_dim(dim);
  if (stride < 1) throw DomainError("sublattice stride must be >= 1");
}

bool SublatticeSet::contains(const LatticePoint& x) const {
  if (x.dim() != dim_) return false;
  for (auto c : x.coords())
    if (c % stride_ != 0) return false;
  return true;
}

BigInt SublatticeSet::count_in_cube(const BigInt& radius) const {
  if (radius < 0) return 0;
  return cube_count_big(radius / stride_, dim_);
}

BigInt SublatticeSet::count_in_ball(const BigInt& radius) const {
  if (radius < 0) return 0;
  const BigInt reach = radius / stride_;
  require_budget(pow_big(2 * reach + 1, static_cast<std::uint64_t>(dim_ - 1)), "sublattice ball count");
  const auto r = static_cast<unsigned __int128>(to_int64(radius));
  const auto s = static_cast<unsigned __int128>(stride_);
  return BigInt(scaled_ball_count(dim_, (r * r) / (s * s)));
}

std::vector<LatticePoint> SublatticeSet::points_in_cube(std::int64_t radius) const {
  const std::int64_t reach = radius / stride_;
  require_budget(cube_count_big(reach, dim_), "sublattice enumeration");
  std::vector<LatticePoint> out;
  for_each_cube_point(reach, dim_, [&](const LatticePoint& y) {
    LatticePoint x = y;
    for (int i = 0; i < dim_; ++i) x[i] *= stride_;
    out.push_back(std::move(x));
  });
  return out;
}

Json SublatticeSet::to_json() const {
  return Json{{"dim", dim_}, {"kind", "rule"}, {"rule_name", "sublattice"}, {"params", {{"stride", stride_}}}};
}

std::string SublatticeSet::describe() const {
  return "(" + std::to_string(stride_) + "Z)^" + std::to_string(dim_);
}

// --- RandomSet --------------------------------------------------------------

RandomSet::RandomSet(int dim, std::uint64_t seed, double exponent) : dim_(dim), seed_(seed), exponent_(exponent) {
  validate_dim(dim);
  if (!(exponent >= 0)) throw DomainError("random set exponent must be nonnegative");
}

bool RandomSet::contains(const LatticePoint& x) const {
  if (x.dim() != dim_) return false;
  std::uint64_t h = splitmix64(seed_);
  for (auto c : x.coords()) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  const double uniform = static_cast<double>(h >> 11U) * 0x1p-53;
  const double p = std::pow(1.0 + static_cast<double>(x.linf()), -exponent_);
  return uniform < p;
}

BigInt RandomSet::count_in_cube(const BigInt& radius) const {
  if (radius < 0) return 0;
  require_budget(cube_count_big(radius, dim_), "random set window count");
  const auto n = static_cast<std::size_t>(to_int64(radius));
  std::lock_guard lock(cube_mutex_);
  // cumulative shell counts, extended on demand
  while (cube_counts_.size() <= n) {
    const auto m = static_cast<std::int64_t>(cube_counts_.size());
    std::uint64_t c = 0;
    if (m == 0) {
      c = contains(LatticePoint(dim_)) ? 1U : 0U;
    } else {
      for_each_shell_point(m, dim_, [&](const LatticePoint& x) { c += contains(x) ? 1U : 0U; });
    }
    cube_counts_.push_back((cube_counts_.empty() ? 0 : cube_counts_.back()) + c);
  }
  return BigInt(cube_counts_[n]);
}

BigInt RandomSet::count_in_shell(const BigInt& index) const {
  if (index < 0) return 0;
  require_budget(shell_count_big(index, dim_), "random set shell count");
  std::uint64_t c = 0;
  for_each_shell_point(to_int64(index), dim_, [&](const LatticePoint& x) { c += contains(x) ? 1U : 0U; });
  return BigInt(c);
}

BigInt RandomSet::count_in_ball(const BigInt& radius) const {
  if (radius < 0) return 0;
  require_budget(cube_count_big(radius, dim_), "random set ball count");
  std::uint64_t c = 0;
  for_each_ball_point(to_int64(radius), dim_, [&](const LatticePoint& x) { c += contains(x) ? 1U : 0U; });
  return BigInt(c);
}

std::vector<LatticePoint> RandomSet::points_in_cube(std::int64_t radius) const {
  require_budget(cube_count_big(radius, dim_), "random set enumeration");
  std::vector<LatticePoint> out;
  for_each_cube_point(radius, dim_, [&](const LatticePoint& x) {
    if (contains(x)) out.push_back(x);
  });
  return out;
}

Json RandomSet::to_json() const {
  return Json{{"dim", dim_},
              {"kind", "random"},
              {"seed", seed_},
              {"profile", {{"name", "inverse_power_linf"}, {"exponent", exponent_}}}};
}

std::string RandomSet::describe() const {
  std::ostringstream os;
  os << "random set in Z^" << dim_ << " (seed " << seed_ << ", P = (1+|g|)^-" << exponent_ << ")";
  return os.str();
}

// --- parsing ----------------------------------------------------------------

SetPtr parse_base_set(const Json& spec) {
  const int dim = spec.at("dim").get<int>();
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "explicit") {
    std::vector<LatticePoint> pts;
    for (const auto& p : spec.at("points")) pts.emplace_back(p.get<std::vector<std::int64_t>>());
    return std::make_shared<ExplicitSet>(dim, std::move(pts));
  }
  if (kind == "rule") {
    const std::string name = spec.at("rule_name").get<std::string>();
    const Json params = spec.value("params", Json::object());
    if (name == "cubic_ray") return std::make_shared<CubicRaySet>(dim);
    if (name == "full") return std::make_shared<FullLatticeSet>(dim);
    if (name == "sublattice") return std::make_shared<SublatticeSet>(dim, params.value("stride", std::int64_t{2}));
    throw DomainError("unknown rule set: " + name);
  }
  if (kind == "random") {
    const auto seed = spec.at("seed").get<std::uint64_t>();
    double exponent = dim / 2.0;
    if (spec.contains("profile")) {
      const Json& prof = spec.at("profile");
      const std::string name = prof.value("name", std::string("inverse_power_linf"));
      if (name != "inverse_power_linf") throw DomainError("unknown density profile: " + name);
      exponent = prof.value("exponent", exponent);
    }
    return std::make_shared<RandomSet>(dim, seed, exponent);
  }
  throw DomainError("unknown set kind: " + kind);
}

// --- WindowCountTable -------------------------------------------------------

WindowCountTable::WindowCountTable(SetPtr set) : set_(std::move(set)) {}

BigInt WindowCountTable::cube(const BigInt& radius) const {
  {
    std::shared_lock lock(mutex_);
    auto it = cube_.find(radius);
    if (it != cube_.end()) return it->second;
  }
  BigInt value = set_->count_in_cube(radius);
  std::unique_lock lock(mutex_);
  return cube_.emplace(radius, std::move(value)).first->second;
}

BigInt WindowCountTable::ball(const BigInt& radius) const {
  {
    std::shared_lock lock(mutex_);
    auto it = ball_.find(radius);
    if (it != ball_.end()) return it->second;
  }
  BigInt value = set_->count_in_ball(radius);
  std::unique_lock lock(mutex_);
  return ball_.emplace(radius, std::move(value)).first->second;
}

std::size_t WindowCountTable::size() const {
  std::shared_lock lock(mutex_);
  return cube_.size() + ball_.size();
}

BigInt count_in_cube(const LatticeSet& set, const BigInt& radius) { return set.count_in_cube(radius); }

// --- density diagnostics ----------------------------------------------------

std::vector<DensityRow> density_profile(const LatticeSet& set, std::int64_t max_radius) {
  if (max_radius < 1) throw DomainError("density_profile requires N_max >= 1");
  std::vector<DensityRow> rows;
  rows.reserve(static_cast<std::size_t>(max_radius));
  for (std::int64_t n = 1; n <= max_radius; ++n) {
    DensityRow row;
    row.radius = n;
    row.cube_count = set.count_in_cube(n);
    row.ball_count = set.count_in_ball(n);
    row.cube_ratio = Rational(row.cube_count, cube_count_big(n, set.dim()));
    row.ball_ratio = Rational(row.ball_count, BigInt(ball_count(n, set.dim())));
    rows.push_back(std::move(row));
  }
  return rows;
}

Rational perturbation_ratio(const LatticeSet& s, const LatticeSet& d, const BigInt& radius) {
  const BigInt base = d.count_in_cube(radius);
  if (base == 0) throw DivisionByZeroError("perturbation ratio: D_N is empty at N = " + to_string(radius));
  if (&s == &d) return Rational(0);
  const std::int64_t n = to_int64(radius);
  const auto a = s.points_in_cube(n);
  const auto b = d.points_in_cube(n);
  std::size_t diff = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i] < b[j])) {
      ++diff, ++i;
    } else if (i == a.size() || b[j] < a[i]) {
      ++diff, ++j;
    } else {
      ++i, ++j;
    }
  }
  return Rational(BigInt(diff), base);
}

BanachEstimate banach_density_estimate(const LatticeSet& set, std::int64_t radius, std::size_t translates) {
  if (translates < 1) throw DomainError("banach_density_estimate requires translates >= 1");
  if (radius < 1) throw DomainError("banach_density_estimate requires N >= 1");
  const int dim = set.dim();
  const auto ball = ball_points(radius, dim);
  require_budget(BigInt(ball.size()) * translates, "Banach density estimate");
  const BigInt ball_size(ball.size());

  BanachEstimate best{Rational(0), LatticePoint(dim), 0};
  bool first = true;
  std::size_t visited = 0;
  for (std::int64_t shell = 0; visited < translates; ++shell) {
    for_each_shell_point(shell, dim, [&](const LatticePoint& v) {
      if (visited >= translates) return;
      LatticePoint g = v;
      for (int i = 0; i < dim; ++i) g[i] *= radius;
      std::uint64_t hits = 0;
      for (const auto& x : ball)
        if (set.contains(x + (-g))) ++hits;
      Rational value(BigInt(hits), ball_size);
      if (first || value > best.value) {
        best.value = value;
        best.argmax = g;
        first = false;
      }
      ++visited;
    });
  }
  best.translates = visited;
  return best;
}

ComparabilityReport check_ball_cube_comparability(const LatticeSet& set, std::int64_t lo, std::int64_t hi,
                                                  const Rational& c, const Rational& big_c,
                                                  const Rational& c_prime) {
  if (lo < 0 || hi < lo) throw DomainError("invalid radius range");
  ComparabilityReport rep;
  for (std::int64_t n = lo; n <= hi; ++n) {
    ComparabilityRow row;
    row.radius = n;
    const BigInt cube = set.count_in_cube(n);
    const BigInt ball = set.count_in_ball(n);
    if (cube == 0) {
      ++rep.zero_denominators;
    } else {
      row.ball_over_cube = Rational(ball, cube);
      if (!rep.min_ball_over_cube || *row.ball_over_cube < *rep.min_ball_over_cube)
        rep.min_ball_over_cube = row.ball_over_cube;
      if (!rep.max_ball_over_cube || *row.ball_over_cube > *rep.max_ball_over_cube)
        rep.max_ball_over_cube = row.ball_over_cube;
    }
    if (ball == 0) {
      ++rep.zero_denominators;
    } else {
      row.doubling = Rational(set.count_in_ball(2 * BigInt(n)), ball);
      if (!rep.max_doubling || *row.doubling > *rep.max_doubling) rep.max_doubling = row.doubling;
    }
    rep.rows.push_back(std::move(row));
  }
  rep.pass = rep.zero_denominators == 0 && rep.min_ball_over_cube && rep.max_doubling &&
             c < *rep.min_ball_over_cube && *rep.max_ball_over_cube < big_c && *rep.max_doubling < c_prime;
  return rep;
}

}  // namespace pertlab
