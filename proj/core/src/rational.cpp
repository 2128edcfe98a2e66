#include "rational.hpp"

#include <cmath>
#include <limits>

namespace mixrl::mathverify::detail {

namespace {
i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();

std::optional<std::int64_t> isqrt_exact(std::int64_t v) {
  if (v < 0) return std::nullopt;
  auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
  for (std::int64_t c = std::max<std::int64_t>(0, r - 2); c <= r + 2; ++c) {
    if (static_cast<i128>(c) * c == v) return c;
  }
  return std::nullopt;
}
}  // namespace

std::optional<Rational> make_rational(i128 num, i128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num > kMax || num < -kMax || den > kMax) return std::nullopt;
  return Rational{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

std::optional<Rational> add(const Rational& a, const Rational& b) {
  return make_rational(static_cast<i128>(a.num) * b.den + static_cast<i128>(b.num) * a.den,
                       static_cast<i128>(a.den) * b.den);
}

std::optional<Rational> sub(const Rational& a, const Rational& b) {
  return make_rational(static_cast<i128>(a.num) * b.den - static_cast<i128>(b.num) * a.den,
                       static_cast<i128>(a.den) * b.den);
}

std::optional<Rational> mul(const Rational& a, const Rational& b) {
  return make_rational(static_cast<i128>(a.num) * b.num, static_cast<i128>(a.den) * b.den);
}

std::optional<Rational> div(const Rational& a, const Rational& b) {
  if (b.num == 0) return std::nullopt;
  return make_rational(static_cast<i128>(a.num) * b.den, static_cast<i128>(a.den) * b.num);
}

std::optional<Rational> pow(const Rational& base, std::int64_t exponent) {
  if (exponent < -64 || exponent > 64) return std::nullopt;
  Rational b = base;
  if (exponent < 0) {
    auto inv = div(Rational{1, 1}, base);
    if (!inv) return std::nullopt;
    b = *inv;
    exponent = -exponent;
  }
  Rational result{1, 1};
  for (std::int64_t i = 0; i < exponent; ++i) {
    auto next = mul(result, b);
    if (!next) return std::nullopt;
    result = *next;
  }
  return result;
}

std::optional<Rational> sqrt_exact(const Rational& a) {
  auto n = isqrt_exact(a.num);
  auto d = isqrt_exact(a.den);
  if (!n || !d) return std::nullopt;
  return make_rational(*n, *d);
}

}  // namespace mixrl::mathverify::detail
