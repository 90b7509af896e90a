#include "pertlab/lattice.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pertlab {

LatticePoint::LatticePoint(std::vector<std::int64_t> coords) : coords_(std::move(coords)) {
  validate_dim(dim());
}

std::uint64_t LatticePoint::linf() const {
  std::uint64_t m = 0;
  for (auto c : coords_) {
    const auto a = c < 0 ? static_cast<std::uint64_t>(-(c + 1)) + 1 : static_cast<std::uint64_t>(c);
    if (a > m) m = a;
  }
  return m;
}

unsigned __int128 LatticePoint::norm2() const {
  unsigned __int128 s = 0;
  for (auto c : coords_) {
    const auto a = c < 0 ? static_cast<std::uint64_t>(-(c + 1)) + 1 : static_cast<std::uint64_t>(c);
    s += static_cast<unsigned __int128>(a) * a;
  }
  return s;
}

LatticePoint LatticePoint::operator+(const LatticePoint& other) const {
  if (other.dim() != dim()) throw DomainError("dimension mismatch in point addition");
  LatticePoint r = *this;
  for (std::size_t i = 0; i < coords_.size(); ++i) r.coords_[i] += other.coords_[i];
  return r;
}

LatticePoint LatticePoint::operator-() const {
  LatticePoint r = *this;
  for (auto& c : r.coords_) c = -c;
  return r;
}

std::string LatticePoint::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (i) os << ',';
    os << coords_[i];
  }
  os << ')';
  return os.str();
}

void validate_dim(int dim) {
  if (dim < 1) throw DomainError("lattice dimension must be >= 1");
}

bool CubeWindow::contains(const LatticePoint& x) const {
  return radius >= 0 && x.linf() <= static_cast<std::uint64_t>(radius);
}

std::uint64_t CubeWindow::count() const { return cube_count(radius, dim); }

bool BallWindow::contains(const LatticePoint& x) const {
  if (radius < 0) return false;
  const auto r = static_cast<unsigned __int128>(radius);
  return x.norm2() <= r * r;
}

std::uint64_t BallWindow::count() const { return ball_count(radius, dim); }

bool Shell::contains(const LatticePoint& x) const {
  return index >= 0 && x.linf() == static_cast<std::uint64_t>(index);
}

std::uint64_t Shell::count() const {
  const BigInt c = shell_count_big(index, dim);
  if (c > std::numeric_limits<std::uint64_t>::max()) throw CapacityError("shell count overflow");
  return static_cast<std::uint64_t>(c);
}

std::uint64_t cube_count(std::int64_t radius, int dim) {
  validate_dim(dim);
  if (radius < 0) throw DomainError("cube radius must be nonnegative");
  unsigned __int128 side = 2 * static_cast<unsigned __int128>(radius) + 1;
  unsigned __int128 acc = 1;
  const unsigned __int128 limit = std::numeric_limits<std::uint64_t>::max();
  for (int i = 0; i < dim; ++i) {
    acc *= side;
    if (acc > limit) {
      throw CapacityError("cube count (2*" + std::to_string(radius) + "+1)^" + std::to_string(dim) +
                          " exceeds 64-bit range");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

BigInt cube_count_big(const BigInt& radius, int dim) {
  validate_dim(dim);
  if (radius < 0) throw DomainError("cube radius must be nonnegative");
  return pow_big(2 * radius + 1, static_cast<std::uint64_t>(dim));
}

BigInt shell_count_big(const BigInt& index, int dim) {
  validate_dim(dim);
  if (index < 0) throw DomainError("shell index must be nonnegative");
  if (index == 0) return 1;
  return pow_big(2 * index + 1, static_cast<std::uint64_t>(dim)) -
         pow_big(2 * index - 1, static_cast<std::uint64_t>(dim));
}

namespace detail {

std::int64_t isqrt_floor(unsigned __int128 n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r > 0 && static_cast<unsigned __int128>(r) * static_cast<unsigned __int128>(r) > n) --r;
  while (static_cast<unsigned __int128>(r + 1) * static_cast<unsigned __int128>(r + 1) <= n) ++r;
  return r;
}

}  // namespace detail

namespace {

// Counts the ball points whose leading coordinates are already fixed; the
// last coordinate is counted in closed form.
std::uint64_t ball_count_rec(int remaining_dims, unsigned __int128 remaining) {
  const std::int64_t reach = detail::isqrt_floor(remaining);
  if (remaining_dims == 1) return static_cast<std::uint64_t>(2 * reach + 1);
  std::uint64_t total = 0;
  for (std::int64_t v = -reach; v <= reach; ++v) {
    const auto a = static_cast<unsigned __int128>(v < 0 ? -v : v);
    total += ball_count_rec(remaining_dims - 1, remaining - a * a);
  }
  return total;
}

}  // namespace

std::uint64_t ball_count(std::int64_t radius, int dim) {
  validate_dim(dim);
  if (radius < 0) throw DomainError("ball radius must be nonnegative");
  const auto r = static_cast<unsigned __int128>(radius);
  return ball_count_rec(dim, r * r);
}

std::vector<LatticePoint> cube_points(std::int64_t radius, int dim) {
  std::vector<LatticePoint> out;
  out.reserve(cube_count(radius, dim));
  for_each_cube_point(radius, dim, [&](const LatticePoint& x) { out.push_back(x); });
  return out;
}

std::vector<LatticePoint> shell_points(std::int64_t index, int dim) {
  if (index < 1) throw DomainError("shell index must be >= 1");
  std::vector<LatticePoint> out;
  for_each_shell_point(index, dim, [&](const LatticePoint& x) { out.push_back(x); });
  return out;
}

std::vector<LatticePoint> ball_points(std::int64_t radius, int dim) {
  std::vector<LatticePoint> out;
  for_each_ball_point(radius, dim, [&](const LatticePoint& x) { out.push_back(x); });
  return out;
}

}  // namespace pertlab
