#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsep/errors.hpp"
#include "rsep/jet.hpp"

namespace rsep {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree over coordinates, bound constants and the
/// elementary function set of the jet module.
struct Expr {
  enum class Kind { number, coord, constant, neg, binary, call };

  Kind kind;
  double number = 0.0;
  int slot = -1;       // coord: coordinate index; constant: constant index
  std::string name;    // identifier or function name
  char op = 0;         // + - * / ^
  ExprPtr lhs, rhs;    // binary; neg/call use lhs only

  static ExprPtr make_number(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::number;
    e->number = v;
    return e;
  }
  static ExprPtr make_coord(std::string n, int slot) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::coord;
    e->name = std::move(n);
    e->slot = slot;
    return e;
  }
  static ExprPtr make_constant(std::string n, int slot) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::constant;
    e->name = std::move(n);
    e->slot = slot;
    return e;
  }
  static ExprPtr make_neg(ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::neg;
    e->lhs = std::move(a);
    return e;
  }
  static ExprPtr make_binary(char op, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::binary;
    e->op = op;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
  }
  static ExprPtr make_call(std::string fn, ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::call;
    e->name = std::move(fn);
    e->lhs = std::move(a);
    return e;
  }
};

namespace detail {

inline std::optional<Uni> uni_by_name(std::string_view s) {
  if (s == "exp") return Uni::exp;
  if (s == "ln") return Uni::log;
  if (s == "sin") return Uni::sin;
  if (s == "cos") return Uni::cos;
  if (s == "sinh") return Uni::sinh;
  if (s == "cosh") return Uni::cosh;
  if (s == "tanh") return Uni::tanh;
  if (s == "sqrt") return Uni::sqrt;
  return std::nullopt;
}

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  std::span<const std::string> coords;
  std::span<const std::string> constants;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& what) { throw parse_error(pos, what); }

  ExprPtr parse_full() {
    skip_ws();
    if (pos >= text.size()) fail("empty expression");
    ExprPtr e = parse_expr(0);
    skip_ws();
    if (pos < text.size()) fail(std::string("unexpected character '") + text[pos] + "'");
    return e;
  }

  // Binding powers: +,- (10) < *,/ (20) < ^ (right assoc, 30) < unary minus (40).
  ExprPtr parse_expr(int min_bp) {
    ExprPtr lhs = parse_prefix();
    while (true) {
      const char c = peek();
      int lbp, rbp;
      if (c == '+' || c == '-') {
        lbp = 10;
        rbp = 11;
      } else if (c == '*' || c == '/') {
        lbp = 20;
        rbp = 21;
      } else if (c == '^') {
        lbp = 31;
        rbp = 30;  // right associative
      } else {
        break;
      }
      if (lbp < min_bp) break;
      ++pos;
      ExprPtr rhs = parse_expr(rbp);
      lhs = Expr::make_binary(c, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_prefix() {
    const char c = peek();
    if (c == '\0') fail("unexpected end of expression");
    if (c == '-') {
      ++pos;
      return Expr::make_neg(parse_expr(40));
    }
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expr(0);
      if (peek() != ')') fail("expected ')'");
      ++pos;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    const char* begin = text.data() + pos;
    const char* end = text.data() + text.size();
    double v = 0.0;
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) fail("malformed number");
    pos += static_cast<std::size_t>(res.ptr - begin);
    return Expr::make_number(v);
  }

  ExprPtr parse_identifier() {
    const std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    const std::string name(text.substr(start, pos - start));
    if (uni_by_name(name)) {
      if (peek() != '(') fail("function '" + name + "' requires parentheses");
      ++pos;
      ExprPtr arg = parse_expr(0);
      if (peek() != ')') fail("expected ')' closing call to '" + name + "'");
      ++pos;
      return Expr::make_call(name, std::move(arg));
    }
    for (std::size_t i = 0; i < coords.size(); ++i)
      if (coords[i] == name) return Expr::make_coord(name, static_cast<int>(i));
    for (std::size_t i = 0; i < constants.size(); ++i)
      if (constants[i] == name) return Expr::make_constant(name, static_cast<int>(i));
    pos = start;
    fail("unknown identifier '" + name + "'");
  }
};

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::binary:
      return (e.op == '+' || e.op == '-') ? 10 : (e.op == '*' || e.op == '/') ? 20 : 30;
    case Expr::Kind::neg: return 5;  // printed with explicit parens where needed
    default: return 100;
  }
}

inline void print_rec(const Expr& e, std::string& out);

inline void print_child(const Expr& c, int parent_prec, bool tighten, std::string& out) {
  const bool parens = precedence(c) < parent_prec + (tighten ? 1 : 0);
  if (parens) out += '(';
  print_rec(c, out);
  if (parens) out += ')';
}

inline void print_rec(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::number:
      out += format_double(e.number);
      break;
    case Expr::Kind::coord:
    case Expr::Kind::constant:
      out += e.name;
      break;
    case Expr::Kind::neg:
      out += '-';
      print_child(*e.lhs, 40, false, out);
      break;
    case Expr::Kind::binary: {
      const int prec = precedence(e);
      // Left child keeps equal precedence for left-assoc ops; the right
      // child needs strictly higher (or parens). '^' is the mirror case.
      print_child(*e.lhs, prec, e.op == '^', out);
      out += e.op;
      print_child(*e.rhs, prec, e.op != '^', out);
      break;
    }
    case Expr::Kind::call:
      out += e.name;
      out += '(';
      print_rec(*e.lhs, out);
      out += ')';
      break;
  }
}

}  // namespace detail

/// Parse `text` over the given coordinate and constant names.
inline ExprPtr parse(std::string_view text, std::span<const std::string> coordinates,
                     std::span<const std::string> constants = {}) {
  detail::Parser p{text, 0, coordinates, constants};
  return p.parse_full();
}

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_rec(e, out);
  return out;
}
inline std::string to_string(const ExprPtr& e) { return to_string(*e); }

/// Evaluate to a jet given coordinate seed jets and constant values.
inline Jet eval_jet(const Expr& e, std::span<const Jet> seeds, std::span<const double> bindings) {
  switch (e.kind) {
    case Expr::Kind::number:
      return Jet::constant(seeds[0].arity(), seeds[0].order(), e.number);
    case Expr::Kind::coord:
      return seeds[e.slot];
    case Expr::Kind::constant:
      return Jet::constant(seeds[0].arity(), seeds[0].order(), bindings[e.slot]);
    case Expr::Kind::neg:
      return -eval_jet(*e.lhs, seeds, bindings);
    case Expr::Kind::binary: {
      Jet a = eval_jet(*e.lhs, seeds, bindings);
      Jet b = eval_jet(*e.rhs, seeds, bindings);
      try {
        switch (e.op) {
          case '+': return a + b;
          case '-': return a - b;
          case '*': return a * b;
          case '/': return a / b;
          case '^': return pow(a, b);
        }
      } catch (const domain_error& err) {
        throw domain_error(std::string(err.what()) + " in '" + to_string(e) + "'");
      }
      throw invalid_input("unknown operator");
    }
    case Expr::Kind::call: {
      Jet a = eval_jet(*e.lhs, seeds, bindings);
      try {
        return apply(*detail::uni_by_name(e.name), a);
      } catch (const domain_error& err) {
        throw domain_error(std::string(err.what()) + " in '" + to_string(e) + "'");
      }
    }
  }
  throw invalid_input("corrupt expression node");
}

/// Evaluate at a plain point (convenience wrapper over seeded jets).
inline Jet eval_jet(const Expr& e, std::span<const double> point,
                    std::span<const double> bindings, int order) {
  const std::vector<Jet> seeds = Jet::seed(point, order);
  return eval_jet(e, seeds, bindings);
}

/// Plain recursive evaluation; bit-identical to the order-0 jet path.
inline double eval_value(const Expr& e, std::span<const double> point,
                         std::span<const double> bindings) {
  switch (e.kind) {
    case Expr::Kind::number: return e.number;
    case Expr::Kind::coord: return point[e.slot];
    case Expr::Kind::constant: return bindings[e.slot];
    case Expr::Kind::neg: return -eval_value(*e.lhs, point, bindings);
    case Expr::Kind::binary: {
      const double a = eval_value(*e.lhs, point, bindings);
      const double b = eval_value(*e.rhs, point, bindings);
      switch (e.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/':
          if (std::abs(b) <= kSingularGuard) throw domain_error("division within singular guard");
          return a / b;
        case '^': {
          const double r = std::nearbyint(b);
          if (std::abs(b - r) < 1e-12 && std::abs(r) <= 32) {
            double acc = 1.0;
            for (int k = 0; k < std::abs(static_cast<int>(r)); ++k) acc *= a;
            if (r < 0) {
              if (std::abs(acc) <= kSingularGuard) throw domain_error("negative power of zero");
              return 1.0 / acc;
            }
            return acc;
          }
          if (a <= kSingularGuard) throw domain_error("fractional power of non-positive value");
          return std::pow(a, b);
        }
      }
      throw invalid_input("unknown operator");
    }
    case Expr::Kind::call: {
      const double a = eval_value(*e.lhs, point, bindings);
      switch (*detail::uni_by_name(e.name)) {
        case Uni::exp: return std::exp(a);
        case Uni::log:
          if (a <= kSingularGuard) throw domain_error("ln of non-positive value");
          return std::log(a);
        case Uni::sin: return std::sin(a);
        case Uni::cos: return std::cos(a);
        case Uni::sinh: return std::sinh(a);
        case Uni::cosh: return std::cosh(a);
        case Uni::tanh: return std::tanh(a);
        case Uni::sqrt:
          if (a <= kSingularGuard) throw domain_error("sqrt of non-positive value");
          return std::sqrt(a);
      }
      throw invalid_input("unknown function");
    }
  }
  throw invalid_input("corrupt expression node");
}

/// Names of the coordinates that appear in the tree.
inline void collect_coordinates(const Expr& e, std::set<std::string>& out) {
  switch (e.kind) {
    case Expr::Kind::coord: out.insert(e.name); break;
    case Expr::Kind::neg:
    case Expr::Kind::call: collect_coordinates(*e.lhs, out); break;
    case Expr::Kind::binary:
      collect_coordinates(*e.lhs, out);
      collect_coordinates(*e.rhs, out);
      break;
    default: break;
  }
}

inline std::set<std::string> free_coordinates(const Expr& e) {
  std::set<std::string> out;
  collect_coordinates(e, out);
  return out;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::number: return a.number == b.number;
    case Expr::Kind::coord:
    case Expr::Kind::constant: return a.name == b.name && a.slot == b.slot;
    case Expr::Kind::neg: return structurally_equal(*a.lhs, *b.lhs);
    case Expr::Kind::binary:
      return a.op == b.op && structurally_equal(*a.lhs, *b.lhs) &&
             structurally_equal(*a.rhs, *b.rhs);
    case Expr::Kind::call: return a.name == b.name && structurally_equal(*a.lhs, *b.lhs);
  }
  return false;
}

}  // namespace rsep
