#pragma once

#include <optional>

#include "mixrl/mathverify.hpp"

namespace mixrl::mathverify::detail {

__extension__ typedef __int128 i128;

// All operations return nullopt on overflow or division by zero.
std::optional<Rational> make_rational(i128 num, i128 den);
std::optional<Rational> add(const Rational& a, const Rational& b);
std::optional<Rational> sub(const Rational& a, const Rational& b);
std::optional<Rational> mul(const Rational& a, const Rational& b);
std::optional<Rational> div(const Rational& a, const Rational& b);
std::optional<Rational> pow(const Rational& base, std::int64_t exponent);
// Exact square root when numerator and denominator are perfect squares.
std::optional<Rational> sqrt_exact(const Rational& a);

}  // namespace mixrl::mathverify::detail
