#pragma once

// Exact integer and rational arithmetic used across the construction.
//
// Radii and window counts in a perturbation plan grow geometrically with the
// block index, so they are carried as arbitrary-precision integers. Lattice
// coordinates of enumerated points stay 64-bit (see lattice.hpp).

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pertlab {

using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<
    boost::multiprecision::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A window or enumeration exceeded the configured budget, or a value does
/// not fit the requested integer width.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Parameters outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A ratio was requested whose denominator count is zero.
class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

/// A positive rational exponent a/b with a, b >= 1, kept exact so that root
/// comparisons such as x <= (u/2^u)^{1/q} * D can be decided in integers.
struct Exponent {
  std::int64_t num = 1;
  std::int64_t den = 1;

  static Exponent parse(const std::string& text);
  static Exponent from_double(double value);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  Rational as_rational() const { return Rational(num, den); }

  friend bool operator==(const Exponent&, const Exponent&) = default;
};

bool operator<(const Exponent& a, const Exponent& b);
inline bool operator<=(const Exponent& a, const Exponent& b) { return !(b < a); }

BigInt pow_big(const BigInt& base, std::uint64_t exponent);
inline BigInt pow2(std::uint64_t exponent) { return BigInt(1) << exponent; }

/// floor(n^{1/k}) for n >= 0.
BigInt iroot(const BigInt& n, unsigned k);
inline BigInt icbrt(const BigInt& n) { return iroot(n, 3); }

/// floor(a / b) for b > 0 and any sign of a.
BigInt floor_div(const BigInt& a, const BigInt& b);
/// Non-negative remainder of a modulo m (m > 0).
BigInt mod_floor(const BigInt& a, const BigInt& m);

/// #{j ∈ [lo, hi] : j ≡ r (mod m)}, m > 0.
BigInt count_congruent(const BigInt& lo, const BigInt& hi, const BigInt& r, const BigInt& m);

/// Smallest integer x >= 0 with (x / base)^q >= num/den, i.e. the exact
/// ceiling of (num/den)^{1/q} * base.
BigInt ceil_scaled_root(const BigInt& base, const BigInt& num, const BigInt& den, Exponent q);

/// Decides lhs < (num/den)^{1/q} * base exactly (lhs, base >= 0).
bool less_than_scaled_root(const BigInt& lhs, const BigInt& base, const BigInt& num,
                           const BigInt& den, Exponent q);

/// Decides lhs <= (num/den)^{1/q} * base exactly.
bool at_most_scaled_root(const BigInt& lhs, const BigInt& base, const BigInt& num,
                         const BigInt& den, Exponent q);

std::int64_t to_int64(const BigInt& v);  // throws CapacityError
bool fits_int64(const BigInt& v);
double to_double(const BigInt& v);
double to_double(const Rational& v);
std::string to_string(const BigInt& v);
std::string to_string(const Rational& v);
BigInt parse_bigint(const std::string& text);  // decimal, or "1e80" style powers of ten

}  // namespace pertlab
