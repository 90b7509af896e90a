#pragma once

// Geometry of Z^d: points, centered cubes R_N, Euclidean balls B_N and the
// ℓ∞-spheres (shells) I_n = R_n \ R_{n-1}.
//
// Every enumeration is lexicographic on the coordinate vector, smallest
// first, so that "take the first t points" rules downstream are reproducible.

#include "pertlab/numeric.hpp"

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pertlab {

class LatticePoint {
 public:
  LatticePoint() = default;
  explicit LatticePoint(int dim) : coords_(static_cast<std::size_t>(dim), 0) {}
  explicit LatticePoint(std::vector<std::int64_t> coords);
  LatticePoint(std::initializer_list<std::int64_t> coords) : coords_(coords) {}

  int dim() const { return static_cast<int>(coords_.size()); }
  std::int64_t operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return coords_[static_cast<std::size_t>(i)]; }
  std::span<const std::int64_t> coords() const { return coords_; }

  /// max_i |x_i|
  std::uint64_t linf() const;
  /// Σ x_i², exact.
  unsigned __int128 norm2() const;

  LatticePoint operator+(const LatticePoint& other) const;
  LatticePoint operator-() const;

  std::string to_string() const;

  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;

 private:
  std::vector<std::int64_t> coords_;
};

/// R_N = {x : max_i |x_i| <= N}.
struct CubeWindow {
  std::int64_t radius = 0;
  int dim = 1;

  bool contains(const LatticePoint& x) const;
  std::uint64_t count() const;
};

/// B_N = {x : ‖x‖₂ <= N}.
struct BallWindow {
  std::int64_t radius = 0;
  int dim = 1;

  bool contains(const LatticePoint& x) const;
  std::uint64_t count() const;
};

/// I_n = {x : max_i |x_i| = n}, n >= 1.
struct Shell {
  std::int64_t index = 1;
  int dim = 1;

  bool contains(const LatticePoint& x) const;
  std::uint64_t count() const;
};

/// (2N+1)^d; throws CapacityError when the value does not fit 64 bits.
std::uint64_t cube_count(std::int64_t radius, int dim);
BigInt cube_count_big(const BigInt& radius, int dim);
/// (2n+1)^d - (2n-1)^d for n >= 1, 1 for n = 0.
BigInt shell_count_big(const BigInt& index, int dim);
std::uint64_t ball_count(std::int64_t radius, int dim);

void validate_dim(int dim);

/// Visits the points of R_N in lexicographic order.
template <class Visitor>
void for_each_cube_point(std::int64_t radius, int dim, Visitor&& visit);

/// Visits the points of I_n in lexicographic order.
template <class Visitor>
void for_each_shell_point(std::int64_t index, int dim, Visitor&& visit);

/// Visits the points of B_N in lexicographic order.
template <class Visitor>
void for_each_ball_point(std::int64_t radius, int dim, Visitor&& visit);

std::vector<LatticePoint> cube_points(std::int64_t radius, int dim);
std::vector<LatticePoint> shell_points(std::int64_t index, int dim);
std::vector<LatticePoint> ball_points(std::int64_t radius, int dim);

// ---------------------------------------------------------------------------

namespace detail {

template <class Visitor>
void cube_rec(LatticePoint& x, int pos, std::int64_t radius, Visitor& visit) {
  if (pos == x.dim()) {
    visit(static_cast<const LatticePoint&>(x));
    return;
  }
  for (std::int64_t v = -radius; v <= radius; ++v) {
    x[pos] = v;
    cube_rec(x, pos + 1, radius, visit);
  }
}

template <class Visitor>
void shell_rec(LatticePoint& x, int pos, std::int64_t index, bool on_boundary, Visitor& visit) {
  if (pos == x.dim()) {
    if (on_boundary) visit(static_cast<const LatticePoint&>(x));
    return;
  }
  if (!on_boundary && pos == x.dim() - 1) {
    // last free coordinate must reach the boundary
    x[pos] = -index;
    visit(static_cast<const LatticePoint&>(x));
    x[pos] = index;
    visit(static_cast<const LatticePoint&>(x));
    return;
  }
  for (std::int64_t v = -index; v <= index; ++v) {
    x[pos] = v;
    shell_rec(x, pos + 1, index, on_boundary || v == -index || v == index, visit);
  }
}

std::int64_t isqrt_floor(unsigned __int128 n);

template <class Visitor>
void ball_rec(LatticePoint& x, int pos, unsigned __int128 remaining, Visitor& visit) {
  if (pos == x.dim()) {
    visit(static_cast<const LatticePoint&>(x));
    return;
  }
  const std::int64_t reach = isqrt_floor(remaining);
  for (std::int64_t v = -reach; v <= reach; ++v) {
    x[pos] = v;
    const auto sq = static_cast<unsigned __int128>(v < 0 ? -v : v) *
                    static_cast<unsigned __int128>(v < 0 ? -v : v);
    ball_rec(x, pos + 1, remaining - sq, visit);
  }
}

}  // namespace detail

template <class Visitor>
void for_each_cube_point(std::int64_t radius, int dim, Visitor&& visit) {
  validate_dim(dim);
  if (radius < 0) return;
  LatticePoint x(dim);
  detail::cube_rec(x, 0, radius, visit);
}

template <class Visitor>
void for_each_shell_point(std::int64_t index, int dim, Visitor&& visit) {
  validate_dim(dim);
  if (index < 0) return;
  LatticePoint x(dim);
  if (index == 0) {
    visit(static_cast<const LatticePoint&>(x));
    return;
  }
  detail::shell_rec(x, 0, index, false, visit);
}

template <class Visitor>
void for_each_ball_point(std::int64_t radius, int dim, Visitor&& visit) {
  validate_dim(dim);
  if (radius < 0) return;
  LatticePoint x(dim);
  const auto r = static_cast<unsigned __int128>(radius);
  detail::ball_rec(x, 0, r * r, visit);
}

}  // namespace pertlab
