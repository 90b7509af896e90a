#include "doctest.h"

#include "pertlab/numeric.hpp"

#include <cmath>

using namespace pertlab;

TEST_CASE("integer roots") {
  for (int n = 0; n < 2000; ++n) {
    const BigInt r = icbrt(BigInt(n));
    CHECK(r * r * r <= n);
    CHECK((r + 1) * (r + 1) * (r + 1) > n);
  }
  CHECK(iroot(pow_big(10, 60), 3) == pow_big(10, 20));
  CHECK(iroot(pow_big(10, 60) - 1, 3) == pow_big(10, 20) - 1);
}

TEST_CASE("floor division and congruence counts") {
  CHECK(floor_div(-7, 2) == -4);
  CHECK(mod_floor(-7, 4) == 1);
  for (int lo = -9; lo <= 9; ++lo)
    for (int hi = lo - 1; hi <= 12; ++hi)
      for (int m = 1; m <= 5; ++m)
        for (int r = -3; r <= 3; ++r) {
          int direct = 0;
          for (int j = lo; j <= hi; ++j) direct += ((j - r) % m + m) % m == 0 ? 1 : 0;
          CHECK(count_congruent(lo, hi, r, m) == direct);
        }
}

TEST_CASE("scaled roots are decided exactly") {
  // (u/2^u)^{1/q} * base with u = 2, q = 2: sqrt(1/2) * base
  for (int base = 0; base <= 200; ++base) {
    const BigInt c = ceil_scaled_root(base, 1, 2, Exponent{2, 1});
    const double v = std::sqrt(0.5) * base;
    CHECK(c == static_cast<long long>(std::ceil(v - 1e-12)));
    if (base > 0) CHECK(less_than_scaled_root(c - 1, base, 1, 2, Exponent{2, 1}));
    CHECK_FALSE(less_than_scaled_root(c, base, 1, 2, Exponent{2, 1}));
  }
  // exact equality: (1/4)^{1/2} * 8 = 4
  CHECK(at_most_scaled_root(4, 8, 1, 4, Exponent{2, 1}));
  CHECK_FALSE(less_than_scaled_root(4, 8, 1, 4, Exponent{2, 1}));
  // rational exponents: (1/8)^{2/3} * 8 = 2
  CHECK(ceil_scaled_root(8, 1, 8, Exponent{3, 2}) == 2);
}

TEST_CASE("exponents") {
  CHECK(Exponent::parse("3/2") == Exponent{3, 2});
  CHECK(Exponent::parse("2") == Exponent{2, 1});
  CHECK(Exponent{1, 1} < Exponent{3, 2});
  CHECK(Exponent::from_double(1.5) == Exponent{3, 2});
  CHECK_THROWS_AS(Exponent::parse("0"), DomainError);
  CHECK_THROWS(Exponent::parse("x"));
}

TEST_CASE("conversions") {
  CHECK(parse_bigint("1e20") == pow_big(10, 20));
  CHECK(parse_bigint("-12") == -12);
  CHECK_THROWS_AS(to_int64(pow_big(2, 63)), CapacityError);
  CHECK(to_int64(-pow_big(2, 63)) == INT64_MIN);
  CHECK(to_string(Rational(6, 4)) == "3/2");
}
