#include "mixrl/mathverify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "mixrl/rng.hpp"
#include "mixrl/text.hpp"
#include "rational.hpp"

namespace mixrl::mathverify {

Expr Expr::integer(std::int64_t v) {
  Expr e;
  e.kind = ExprKind::Number;
  e.number = Number{true, Rational{v, 1}, static_cast<double>(v)};
  return e;
}

Expr Expr::real(double v) {
  Expr e;
  e.kind = ExprKind::Number;
  e.number = Number{false, Rational{}, v};
  return e;
}

Expr Expr::symbol(std::string name) {
  Expr e;
  e.kind = ExprKind::Symbol;
  e.name = std::move(name);
  return e;
}

Expr Expr::unary(ExprKind kind, Expr operand) {
  Expr e;
  e.kind = kind;
  e.children.push_back(std::move(operand));
  return e;
}

Expr Expr::binary(ExprKind kind, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = kind;
  e.children.push_back(std::move(lhs));
  e.children.push_back(std::move(rhs));
  return e;
}

Expr Expr::function(std::string name, Expr arg) {
  Expr e;
  e.kind = ExprKind::Function;
  e.name = std::move(name);
  e.children.push_back(std::move(arg));
  return e;
}

namespace {

constexpr std::string_view kPi = "pi";

enum class Tok {
  Number,
  Symbol,
  Function,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  Equals,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Underscore,
  Frac,
  Sqrt,
  Boxed,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t pos = 0;
};

struct LexError {
  std::size_t pos;
  std::string message;
};

constexpr std::string_view kFunctionNames[] = {"sqrt", "sin", "cos", "tan", "exp", "log", "ln"};

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::variant<std::vector<Token>, LexError> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string t, std::size_t p) { out.push_back(Token{k, std::move(t), p}); };
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '$') {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i < s.size() && s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1])) {
        ++i;
        while (i < s.size() && is_digit(s[i])) ++i;
      }
      push(Tok::Number, std::string(s.substr(start, i - start)), start);
      continue;
    }
    if (is_letter(c)) {
      std::string_view rest = s.substr(i);
      bool matched = false;
      for (auto name : kFunctionNames) {
        if (rest.substr(0, name.size()) == name) {
          push(Tok::Function, std::string(name), start);
          i += name.size();
          matched = true;
          break;
        }
      }
      if (!matched && rest.substr(0, 2) == kPi) {
        push(Tok::Symbol, std::string(kPi), start);
        i += 2;
        matched = true;
      }
      if (!matched) {
        push(Tok::Symbol, std::string(1, c), start);
        ++i;
      }
      continue;
    }
    if (c == '\\') {
      ++i;
      std::size_t name_start = i;
      while (i < s.size() && is_letter(s[i])) ++i;
      std::string_view cmd = s.substr(name_start, i - name_start);
      if (cmd.empty()) {
        if (i >= s.size()) return LexError{start, "dangling backslash"};
        char sym = s[i++];
        if (sym == ',' || sym == ';' || sym == ':' || sym == '!' || sym == ' ') continue;
        return LexError{start, std::string("unsupported escape '\\") + sym + "'"};
      }
      if (cmd == "frac" || cmd == "dfrac" || cmd == "tfrac") {
        push(Tok::Frac, std::string(cmd), start);
      } else if (cmd == "sqrt") {
        push(Tok::Sqrt, "sqrt", start);
      } else if (cmd == "boxed") {
        push(Tok::Boxed, "boxed", start);
      } else if (cmd == "pi") {
        push(Tok::Symbol, std::string(kPi), start);
      } else if (cmd == "cdot" || cmd == "times" || cmd == "ast") {
        push(Tok::Star, "*", start);
      } else if (cmd == "div") {
        push(Tok::Slash, "/", start);
      } else if (cmd == "left" || cmd == "right" || cmd == "quad" || cmd == "qquad") {
        // \left( and \right) reduce to their delimiters.
      } else if (std::find(std::begin(kFunctionNames), std::end(kFunctionNames), cmd) !=
                 std::end(kFunctionNames)) {
        push(Tok::Function, std::string(cmd), start);
      } else {
        return LexError{start, "unknown command '\\" + std::string(cmd) + "'"};
      }
      continue;
    }
    // UTF-8 operators that show up in model answers.
    auto utf8 = [&](std::string_view seq) { return s.substr(i, seq.size()) == seq; };
    if (utf8("\xE2\x88\x92")) {  // U+2212 minus
      push(Tok::Minus, "-", start);
      i += 3;
      continue;
    }
    if (utf8("\xC3\x97")) {  // U+00D7 multiplication
      push(Tok::Star, "*", start);
      i += 2;
      continue;
    }
    if (utf8("\xC3\xB7")) {  // U+00F7 division
      push(Tok::Slash, "/", start);
      i += 2;
      continue;
    }
    if (utf8("\xCF\x80")) {  // U+03C0 pi
      push(Tok::Symbol, std::string(kPi), start);
      i += 2;
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '/': kind = Tok::Slash; break;
      case '^': kind = Tok::Caret; break;
      case '=': kind = Tok::Equals; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case '{': kind = Tok::LBrace; break;
      case '}': kind = Tok::RBrace; break;
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case '_': kind = Tok::Underscore; break;
      default: return LexError{start, std::string("unexpected character '") + c + "'"};
    }
    push(kind, std::string(1, c), start);
    ++i;
  }
  out.push_back(Token{Tok::End, "", s.size()});
  return out;
}

struct Failure {
  ParseError error;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Expr parse_top() {
    Expr lhs = parse_sum();
    if (peek().kind == Tok::Equals) {
      next();
      Expr rhs = parse_sum();
      if (peek().kind == Tok::Equals) fail("chained equations are not supported");
      lhs = Expr::binary(ExprKind::Equation, std::move(lhs), std::move(rhs));
    }
    if (peek().kind != Tok::End) {
      if (peek().kind == Tok::RParen || peek().kind == Tok::RBrace) fail("unbalanced delimiter");
      fail("unexpected token '" + peek().text + "'");
    }
    return lhs;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(std::string message) const {
    throw Failure{ParseError{peek().pos, std::move(message)}};
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("unbalanced ") + what);
    next();
  }

  static bool starts_implicit_factor(Tok k) {
    return k == Tok::Symbol || k == Tok::Function || k == Tok::LParen || k == Tok::LBrace ||
           k == Tok::Frac || k == Tok::Sqrt || k == Tok::Boxed;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      ExprKind op = next().kind == Tok::Plus ? ExprKind::Add : ExprKind::Sub;
      lhs = Expr::binary(op, std::move(lhs), parse_product());
    }
    return lhs;
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      Tok k = peek().kind;
      if (k == Tok::Star || k == Tok::Slash) {
        next();
        lhs = Expr::binary(k == Tok::Star ? ExprKind::Mul : ExprKind::Div, std::move(lhs),
                           parse_unary());
      } else if (starts_implicit_factor(k)) {
        lhs = Expr::binary(ExprKind::Mul, std::move(lhs), parse_power());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (peek().kind == Tok::Minus) {
      next();
      return Expr::unary(ExprKind::Neg, parse_unary());
    }
    if (peek().kind == Tok::Plus) {
      next();
      return parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (peek().kind == Tok::Caret) {
      next();
      return Expr::binary(ExprKind::Pow, std::move(base), parse_unary());
    }
    return base;
  }

  Expr parse_group(Tok close, const char* what) {
    next();
    Expr inner = parse_sum();
    expect(close, what);
    return inner;
  }

  Expr number_from(const std::string& literal) {
    if (literal.find('.') == std::string::npos) {
      std::int64_t v = 0;
      auto res = std::from_chars(literal.data(), literal.data() + literal.size(), v);
      if (res.ec == std::errc{} && res.ptr == literal.data() + literal.size()) return Expr::integer(v);
    }
    double d = 0.0;
    std::from_chars(literal.data(), literal.data() + literal.size(), d);
    return Expr::real(d);
  }

  // Argument of \frac or \sqrt: a braced group or a single digit/letter (\frac12).
  Expr parse_latex_arg() {
    Token& t = toks_[pos_];
    if (t.kind == Tok::LBrace) return parse_group(Tok::RBrace, "brace");
    if (t.kind == Tok::Number) {
      if (t.text.size() > 1 && is_digit(t.text[0]) && is_digit(t.text[1])) {
        std::string first(1, t.text[0]);
        t.text.erase(0, 1);
        ++t.pos;
        return number_from(first);
      }
      return number_from(next().text);
    }
    if (t.kind == Tok::Symbol) return Expr::symbol(next().text);
    fail("expected a LaTeX argument");
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: return number_from(next().text);
      case Tok::Symbol: {
        std::string name = next().text;
        if (peek().kind == Tok::Underscore) {
          next();
          name += "_";
          if (peek().kind == Tok::LBrace) {
            next();
            while (peek().kind == Tok::Number || peek().kind == Tok::Symbol) name += next().text;
            expect(Tok::RBrace, "brace");
          } else if (peek().kind == Tok::Number || peek().kind == Tok::Symbol) {
            name += next().text;
          } else {
            fail("expected a subscript");
          }
        }
        return Expr::symbol(std::move(name));
      }
      case Tok::LParen: return parse_group(Tok::RParen, "parenthesis");
      case Tok::LBrace: return parse_group(Tok::RBrace, "brace");
      case Tok::Frac: {
        next();
        Expr num = parse_latex_arg();
        Expr den = parse_latex_arg();
        return Expr::binary(ExprKind::Div, std::move(num), std::move(den));
      }
      case Tok::Sqrt: {
        next();
        std::optional<Expr> index;
        if (peek().kind == Tok::LBracket) index = parse_group(Tok::RBracket, "bracket");
        Expr arg = parse_latex_arg();
        if (!index) return Expr::function("sqrt", std::move(arg));
        return Expr::binary(ExprKind::Pow, std::move(arg),
                            Expr::binary(ExprKind::Div, Expr::integer(1), std::move(*index)));
      }
      case Tok::Boxed: {
        next();
        if (peek().kind != Tok::LBrace) fail("\\boxed requires a braced argument");
        return parse_group(Tok::RBrace, "brace");
      }
      case Tok::Function: {
        std::string name = next().text;
        if (peek().kind == Tok::LParen) return Expr::function(name, parse_group(Tok::RParen, "parenthesis"));
        if (peek().kind == Tok::LBrace) return Expr::function(name, parse_group(Tok::RBrace, "brace"));
        return Expr::function(name, parse_power());
      }
      case Tok::End: fail("unexpected end of input");
      default: fail("unexpected token '" + t.text + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---- evaluation -----------------------------------------------------------

struct Value {
  bool exact = false;
  Rational q;
  double d = 0.0;
};

Value inexact(double d) { return Value{false, {}, d}; }
Value exact_value(Rational q) { return Value{true, q, q.to_double()}; }

std::optional<Value> finite(double d) {
  if (!std::isfinite(d)) return std::nullopt;
  return inexact(d);
}

std::optional<Value> eval(const Expr& e, const Assignment* vars, bool exact_only) {
  switch (e.kind) {
    case ExprKind::Number:
      if (e.number.exact) return exact_value(e.number.rational);
      if (exact_only) return std::nullopt;
      return finite(e.number.value);
    case ExprKind::Symbol: {
      if (exact_only) return std::nullopt;
      if (e.name == kPi) return inexact(std::numbers::pi);
      if (!vars) return std::nullopt;
      auto it = vars->find(e.name);
      if (it == vars->end()) return std::nullopt;
      return finite(it->second);
    }
    case ExprKind::Neg: {
      auto a = eval(e.children[0], vars, exact_only);
      if (!a) return std::nullopt;
      if (a->exact) return exact_value(Rational{-a->q.num, a->q.den});
      return inexact(-a->d);
    }
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      auto a = eval(e.children[0], vars, exact_only);
      if (!a) return std::nullopt;
      auto b = eval(e.children[1], vars, exact_only);
      if (!b) return std::nullopt;
      if (e.kind == ExprKind::Div && b->d == 0.0) return std::nullopt;
      if (a->exact && b->exact) {
        std::optional<Rational> r;
        switch (e.kind) {
          case ExprKind::Add: r = detail::add(a->q, b->q); break;
          case ExprKind::Sub: r = detail::sub(a->q, b->q); break;
          case ExprKind::Mul: r = detail::mul(a->q, b->q); break;
          default: r = detail::div(a->q, b->q); break;
        }
        if (r) return exact_value(*r);
        if (exact_only) return std::nullopt;
      } else if (exact_only) {
        return std::nullopt;
      }
      switch (e.kind) {
        case ExprKind::Add: return finite(a->d + b->d);
        case ExprKind::Sub: return finite(a->d - b->d);
        case ExprKind::Mul: return finite(a->d * b->d);
        default: return finite(a->d / b->d);
      }
    }
    case ExprKind::Pow: {
      auto a = eval(e.children[0], vars, exact_only);
      if (!a) return std::nullopt;
      auto b = eval(e.children[1], vars, exact_only);
      if (!b) return std::nullopt;
      if (a->d == 0.0 && b->d < 0.0) return std::nullopt;
      if (a->exact && b->exact && b->q.den == 1) {
        if (auto r = detail::pow(a->q, b->q.num)) return exact_value(*r);
      }
      // x^(1/2) of a perfect square stays exact.
      if (a->exact && b->exact && b->q.num == 1 && b->q.den == 2) {
        if (auto r = detail::sqrt_exact(a->q)) return exact_value(*r);
      }
      if (exact_only) return std::nullopt;
      return finite(std::pow(a->d, b->d));
    }
    case ExprKind::Function: {
      auto a = eval(e.children[0], vars, exact_only);
      if (!a) return std::nullopt;
      if (e.name == "sqrt") {
        if (a->d < 0.0) return std::nullopt;
        if (a->exact) {
          if (auto r = detail::sqrt_exact(a->q)) return exact_value(*r);
        }
        if (exact_only) return std::nullopt;
        return finite(std::sqrt(a->d));
      }
      if (exact_only) return std::nullopt;
      double x = a->d;
      if (e.name == "sin") return finite(std::sin(x));
      if (e.name == "cos") return finite(std::cos(x));
      if (e.name == "tan") return finite(std::tan(x));
      if (e.name == "exp") return finite(std::exp(x));
      if (e.name == "ln") return x > 0 ? finite(std::log(x)) : std::nullopt;
      if (e.name == "log") return x > 0 ? finite(std::log10(x)) : std::nullopt;
      return std::nullopt;
    }
    case ExprKind::Equation: return std::nullopt;
  }
  return std::nullopt;
}

void collect_symbols(const Expr& e, std::set<std::string>& out) {
  if (e.kind == ExprKind::Symbol && e.name != kPi) out.insert(e.name);
  for (const auto& c : e.children) collect_symbols(c, out);
}

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool values_agree(const Value& a, const Value& b, double tol) {
  if (a.exact && b.exact) return a.q == b.q;
  return close(a.d, b.d, tol);
}

double probe_coordinate(Rng& rng) {
  // Uniform over [-3,-0.5] U [0.5,3].
  double u = rng.uniform(0.5, 3.0);
  return (rng.next_u64() & 1) ? u : -u;
}

bool compare_values(const Expr& a, const Expr& b, double tol) {
  std::set<std::string> vars;
  collect_symbols(a, vars);
  collect_symbols(b, vars);
  if (vars.empty()) {
    auto va = eval(a, nullptr, false);
    auto vb = eval(b, nullptr, false);
    if (!va || !vb) return false;
    return values_agree(*va, *vb, tol);
  }
  Rng rng(kProbeSeed);
  for (int point = 0; point < kProbePoints; ++point) {
    bool evaluated = false;
    for (int attempt = 0; attempt <= kProbeRedraws && !evaluated; ++attempt) {
      Assignment assignment;
      for (const auto& v : vars) assignment[v] = probe_coordinate(rng);
      auto va = eval(a, &assignment, false);
      auto vb = eval(b, &assignment, false);
      if (!va || !vb) continue;
      evaluated = true;
      if (!values_agree(*va, *vb, tol)) return false;
    }
    if (!evaluated) return false;
  }
  return true;
}

// The value side of `lhs = rhs` when the other side is a bare variable.
const Expr* value_side(const Expr& eq) {
  const Expr& lhs = eq.children[0];
  const Expr& rhs = eq.children[1];
  if (lhs.kind == ExprKind::Symbol && lhs.name != kPi) return &rhs;
  if (rhs.kind == ExprKind::Symbol && rhs.name != kPi) return &lhs;
  return nullptr;
}

bool equivalent_impl(const Expr& a, const Expr& b, double tol) {
  if (a == b) return true;
  bool a_eq = a.kind == ExprKind::Equation;
  bool b_eq = b.kind == ExprKind::Equation;
  if (a_eq && b_eq) {
    return (equivalent_impl(a.children[0], b.children[0], tol) &&
            equivalent_impl(a.children[1], b.children[1], tol)) ||
           (equivalent_impl(a.children[0], b.children[1], tol) &&
            equivalent_impl(a.children[1], b.children[0], tol));
  }
  if (a_eq || b_eq) {
    const Expr& eq = a_eq ? a : b;
    const Expr& other = a_eq ? b : a;
    const Expr* side = value_side(eq);
    return side != nullptr && equivalent_impl(*side, other, tol);
  }
  return compare_values(a, b, tol);
}

// ---- final-expression extraction -------------------------------------------

bool looks_mathy(std::string_view word) {
  if (word.empty()) return false;
  for (char c : word) {
    if (is_digit(c) || c == '\\' || c == '+' || c == '-' || c == '*' || c == '/' || c == '^' ||
        c == '=' || c == '(' || c == ')' || c == '{' || c == '}' || c == '_' || c == '$') {
      return true;
    }
  }
  if (word.size() == 1 && is_letter(word[0])) return true;
  if (word == kPi) return true;
  return std::find(std::begin(kFunctionNames), std::end(kFunctionNames), word) !=
         std::end(kFunctionNames);
}

std::string_view strip_trailing_punct(std::string_view s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' ||
                        s.back() == ':' || s.back() == '!' || s.back() == '?')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::string> last_boxed(std::string_view s) {
  constexpr std::string_view kBoxed = "\\boxed{";
  auto at = s.rfind(kBoxed);
  if (at == std::string_view::npos) return std::nullopt;
  std::size_t i = at + kBoxed.size();
  int depth = 1;
  for (std::size_t j = i; j < s.size(); ++j) {
    if (s[j] == '{') ++depth;
    if (s[j] == '}' && --depth == 0) return std::string(text::trim(s.substr(i, j - i)));
  }
  return std::nullopt;
}

}  // namespace

ParseResult parse_expression(std::string_view input) {
  auto lexed = lex(input);
  if (auto* err = std::get_if<LexError>(&lexed)) return ParseError{err->pos, err->message};
  try {
    Parser parser(std::move(std::get<std::vector<Token>>(lexed)));
    return parser.parse_top();
  } catch (const Failure& f) {
    return f.error;
  }
}

std::string unparse(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Number:
      if (e.number.exact) {
        const auto& q = e.number.rational;
        std::string s = q.den == 1 ? std::to_string(q.num)
                                   : "(" + std::to_string(q.num) + "/" + std::to_string(q.den) + ")";
        return q.num < 0 ? "(" + s + ")" : s;
      }
      return e.number.value < 0 ? "(" + text::format_double(e.number.value) + ")"
                                : text::format_double(e.number.value);
    case ExprKind::Symbol: return e.name;
    case ExprKind::Neg: return "(-" + unparse(e.children[0]) + ")";
    case ExprKind::Function: return e.name + "(" + unparse(e.children[0]) + ")";
    case ExprKind::Equation: return unparse(e.children[0]) + "=" + unparse(e.children[1]);
    default: break;
  }
  const char* op = "+";
  switch (e.kind) {
    case ExprKind::Sub: op = "-"; break;
    case ExprKind::Mul: op = "*"; break;
    case ExprKind::Div: op = "/"; break;
    case ExprKind::Pow: op = "^"; break;
    default: break;
  }
  return "(" + unparse(e.children[0]) + op + unparse(e.children[1]) + ")";
}

std::optional<double> evaluate(const Expr& e, const Assignment& vars) {
  auto v = eval(e, &vars, false);
  if (!v) return std::nullopt;
  return v->d;
}

std::optional<Rational> evaluate_exact(const Expr& e) {
  auto v = eval(e, nullptr, true);
  if (!v || !v->exact) return std::nullopt;
  return v->q;
}

std::set<std::string> free_symbols(const Expr& e) {
  std::set<std::string> out;
  collect_symbols(e, out);
  return out;
}

std::string extract_final_expression(std::string_view answer) {
  if (auto boxed = last_boxed(answer)) return *boxed;
  std::string_view trimmed = strip_trailing_punct(text::trim(answer));
  auto words = text::split_whitespace(trimmed);
  std::size_t run_start = words.size();
  while (run_start > 0 && looks_mathy(strip_trailing_punct(words[run_start - 1]))) --run_start;
  for (std::size_t i = run_start; i < words.size(); ++i) {
    auto begin = words[i].data() - trimmed.data();
    std::string_view candidate = trimmed.substr(static_cast<std::size_t>(begin));
    if (parse_expression(candidate)) return std::string(candidate);
  }
  return std::string(text::trim(answer));
}

bool equivalent(const Expr& a, const Expr& b, double tol) { return equivalent_impl(a, b, tol); }

bool equivalent(std::string_view a, std::string_view b, double tol) {
  auto pb = parse_expression(b);
  if (!pb) return false;
  auto pa = parse_expression(a);
  if (!pa) return false;
  return equivalent_impl(pa.expr(), pb.expr(), tol);
}

}  // namespace mixrl::mathverify
