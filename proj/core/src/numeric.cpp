#include "pertlab/numeric.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pertlab {

namespace {

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }

Exponent normalized(std::int64_t num, std::int64_t den) {
  if (num <= 0 || den <= 0) throw DomainError("exponent must be a positive rational");
  const auto g = gcd64(num, den);
  return Exponent{num / g, den / g};
}

}  // namespace

namespace {

std::int64_t parse_int(const std::string& text, const std::string& whole) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw DomainError("malformed exponent: " + whole);
  return v;
}

}  // namespace

Exponent Exponent::parse(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    return normalized(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return normalized(parse_int(text, text), 1);
  // Decimal literal: exact conversion of the written digits.
  const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  const auto places = text.size() - dot - 1;
  if (places > 12) throw DomainError("exponent has too many decimal places: " + text);
  std::int64_t den = 1;
  for (std::size_t i = 0; i < places; ++i) den *= 10;
  return normalized(parse_int(digits, text), den);
}

Exponent Exponent::from_double(double value) {
  if (!(value > 0) || !std::isfinite(value)) throw DomainError("exponent must be positive");
  // Continued-fraction convergents up to a denominator of 10^6.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = value;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    const double frac = x - a;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - value) < 1e-12 || frac < 1e-12)
      break;
    x = 1.0 / frac;
  }
  return normalized(h1, k1);
}

std::string Exponent::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

bool operator<(const Exponent& a, const Exponent& b) {
  return BigInt(a.num) * b.den < BigInt(b.num) * a.den;
}

BigInt pow_big(const BigInt& base, std::uint64_t exponent) {
  BigInt result = 1;
  BigInt b = base;
  while (exponent > 0) {
    if (exponent & 1U) result *= b;
    exponent >>= 1U;
    if (exponent > 0) b *= b;
  }
  return result;
}

BigInt iroot(const BigInt& n, unsigned k) {
  if (n < 0) throw DomainError("iroot of a negative number");
  if (k == 0) throw DomainError("iroot of order zero");
  if (n < 2 || k == 1) return n;
  // Bracket by bit length, then bisect.
  const auto bits = boost::multiprecision::msb(n) + 1;
  BigInt lo = 0;
  BigInt hi = BigInt(1) << (bits / k + 1);
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) >> 1;
    if (pow_big(mid, k) <= n) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

BigInt floor_div(const BigInt& a, const BigInt& b) {
  if (b <= 0) throw DomainError("floor_div requires a positive divisor");
  BigInt q = a / b;  // truncates toward zero
  if (a < 0 && q * b != a) q -= 1;
  return q;
}

BigInt mod_floor(const BigInt& a, const BigInt& m) { return a - floor_div(a, m) * m; }

namespace {

// x^a * den^b >= num^b * base^a
bool reaches_root(const BigInt& x, const BigInt& base, const BigInt& num, const BigInt& den,
                  Exponent q) {
  const auto a = static_cast<std::uint64_t>(q.num);
  const auto b = static_cast<std::uint64_t>(q.den);
  return pow_big(x, a) * pow_big(den, b) >= pow_big(num, b) * pow_big(base, a);
}

}  // namespace

BigInt ceil_scaled_root(const BigInt& base, const BigInt& num, const BigInt& den, Exponent q) {
  if (base < 0 || num < 0 || den <= 0) throw DomainError("ceil_scaled_root: invalid arguments");
  if (base == 0 || num == 0) return 0;
  BigInt hi = base > 0 ? base : BigInt(1);
  while (!reaches_root(hi, base, num, den, q)) hi <<= 1;
  BigInt lo = -1;  // invariant: lo fails, hi reaches
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) >> 1;
    if (mid >= 0 && reaches_root(mid, base, num, den, q)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

bool less_than_scaled_root(const BigInt& lhs, const BigInt& base, const BigInt& num,
                           const BigInt& den, Exponent q) {
  if (lhs < 0 || base < 0 || num < 0 || den <= 0)
    throw DomainError("less_than_scaled_root: invalid arguments");
  const auto a = static_cast<std::uint64_t>(q.num);
  const auto b = static_cast<std::uint64_t>(q.den);
  return pow_big(lhs, a) * pow_big(den, b) < pow_big(num, b) * pow_big(base, a);
}

bool at_most_scaled_root(const BigInt& lhs, const BigInt& base, const BigInt& num,
                         const BigInt& den, Exponent q) {
  if (lhs < 0 || base < 0 || num < 0 || den <= 0)
    throw DomainError("at_most_scaled_root: invalid arguments");
  const auto a = static_cast<std::uint64_t>(q.num);
  const auto b = static_cast<std::uint64_t>(q.den);
  return pow_big(lhs, a) * pow_big(den, b) <= pow_big(num, b) * pow_big(base, a);
}

BigInt count_congruent(const BigInt& lo, const BigInt& hi, const BigInt& r, const BigInt& m) {
  if (hi < lo) return 0;
  return floor_div(hi - r, m) - floor_div(lo - 1 - r, m);
}

bool fits_int64(const BigInt& v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

std::int64_t to_int64(const BigInt& v) {
  if (!fits_int64(v)) throw CapacityError("value " + to_string(v) + " exceeds 64-bit range");
  return static_cast<std::int64_t>(v);
}

double to_double(const BigInt& v) { return v.convert_to<double>(); }

double to_double(const Rational& v) {
  // Scale before converting so that huge numerators and denominators keep
  // their relative precision.
  const BigInt& n = boost::multiprecision::numerator(v);
  const BigInt& d = boost::multiprecision::denominator(v);
  if (n == 0) return 0.0;
  const long nb = static_cast<long>(boost::multiprecision::msb(abs(n)));
  const long db = static_cast<long>(boost::multiprecision::msb(d));
  const long shift = nb - db;
  BigInt scaled_n = n;
  BigInt scaled_d = d;
  // Bring the quotient into [2^60, 2^62) in integer arithmetic.
  const long want = 61 - shift;
  if (want > 0) {
    scaled_n <<= static_cast<unsigned>(want);
  } else if (want < 0) {
    scaled_d <<= static_cast<unsigned>(-want);
  }
  const BigInt q = scaled_n / scaled_d;
  return std::ldexp(q.convert_to<double>(), static_cast<int>(-want));
}

std::string to_string(const BigInt& v) { return v.str(); }

std::string to_string(const Rational& v) {
  const BigInt& n = boost::multiprecision::numerator(v);
  const BigInt& d = boost::multiprecision::denominator(v);
  if (d == 1) return n.str();
  return n.str() + "/" + d.str();
}

BigInt parse_bigint(const std::string& text) {
  const auto e = text.find_first_of("eE");
  if (e != std::string::npos) {
    const BigInt mantissa(text.substr(0, e));
    const auto power = std::stoul(text.substr(e + 1));
    return mantissa * pow_big(10, power);
  }
  return BigInt(text);
}

}  // namespace pertlab
