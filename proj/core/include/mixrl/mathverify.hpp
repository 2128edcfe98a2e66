#pragma once

// Math answer parsing and equivalence.
//
// Accepted token set (whitespace and '$' are ignored):
//   numbers      123  4.5  .5
//   symbols      single letters (x, y, A), optional subscript x_1 / x_{12}; pi, \pi, π
//   operators    + - * / ^ =  \cdot \times \ast \div  − × ÷
//   grouping     ( )  { }  \left( \right)
//   LaTeX        \frac{a}{b} (also \dfrac, \tfrac, \frac12), \sqrt{x}, \sqrt[n]{x}, \boxed{...}
//   functions    sqrt sin cos tan ln log exp, with or without a leading backslash
//   spacing      \, \; \: \! \quad \qquad
//
// Grammar (LL, loosest to tightest):
//   equation := sum [ '=' sum ]
//   sum      := product (('+' | '-') product)*
//   product  := unary (('*' | '/') unary | <implicit> power)*
//   unary    := ('-' | '+') unary | power
//   power    := primary [ '^' unary ]
// Implicit multiplication applies when the next token opens a symbol, function,
// group or LaTeX construct, never a bare number ("2x" and "x(y+1)" but not "x 2").

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mixrl::mathverify {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

enum class ExprKind { Number, Symbol, Add, Sub, Mul, Div, Pow, Neg, Function, Equation };

struct Number {
  bool exact = true;   // integer literal held as a rational
  Rational rational;   // valid when exact
  double value = 0.0;  // always valid
  friend bool operator==(const Number&, const Number&) = default;
};

struct Expr {
  ExprKind kind = ExprKind::Number;
  Number number;                // Number
  std::string name;             // Symbol, Function
  std::vector<Expr> children;   // operands / function arguments

  static Expr integer(std::int64_t v);
  static Expr real(double v);
  static Expr symbol(std::string name);
  static Expr unary(ExprKind kind, Expr operand);
  static Expr binary(ExprKind kind, Expr lhs, Expr rhs);
  static Expr function(std::string name, Expr arg);

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct ParseError {
  std::size_t position = 0;
  std::string message;
};

class ParseResult {
 public:
  ParseResult(Expr e) : value_(std::move(e)) {}
  ParseResult(ParseError e) : value_(std::move(e)) {}

  bool ok() const { return std::holds_alternative<Expr>(value_); }
  explicit operator bool() const { return ok(); }
  const Expr& expr() const { return std::get<Expr>(value_); }
  const ParseError& error() const { return std::get<ParseError>(value_); }

 private:
  std::variant<Expr, ParseError> value_;
};

ParseResult parse_expression(std::string_view text);

// Fully parenthesized text that parses back to the same tree.
std::string unparse(const Expr& e);

using Assignment = std::map<std::string, double>;

// Floating evaluation; nullopt on singularities (x/0, ln of non-positive,
// even roots of negatives), unbound symbols, equations or non-finite results.
std::optional<double> evaluate(const Expr& e, const Assignment& vars = {});

// Exact evaluation for integer/fraction-only expressions; nullopt when any
// step leaves the rationals or overflows 64 bits.
std::optional<Rational> evaluate_exact(const Expr& e);

// Free variables ("pi" is a constant, not a variable).
std::set<std::string> free_symbols(const Expr& e);

// Isolates the math payload of a free-text answer: the last \boxed{...}, else
// the longest parseable trailing run of math-looking words, else the trimmed answer.
std::string extract_final_expression(std::string_view answer);

inline constexpr std::uint64_t kProbeSeed = 0x564C4141;
inline constexpr int kProbePoints = 16;
inline constexpr int kProbeRedraws = 8;
inline constexpr double kDefaultTolerance = 1e-6;

bool equivalent(const Expr& a, const Expr& b, double tol = kDefaultTolerance);

// False when either side fails to parse.
bool equivalent(std::string_view a, std::string_view b, double tol = kDefaultTolerance);

}  // namespace mixrl::mathverify
