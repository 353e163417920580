#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfdim/errors.hpp"

namespace cfdim {

// A tiny arithmetic expression language over one free variable `x`:
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' factor)?            ('^' is right-associative)
//   base   := NUMBER | 'x' | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//   IDENT  := log | exp | sqrt | abs | min | max
//
// NUMBER is a non-negative decimal literal with optional fraction and
// exponent. Parse errors carry the byte offset of the offending character;
// evaluation errors (log of a non-positive value, division by zero, ...)
// carry the evaluation point.
class Expression {
 public:
  enum class Op {
    kNumber,
    kVar,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
    kLog,
    kExp,
    kSqrt,
    kAbs,
    kMin,
    kMax,
  };

  struct Node {
    Op op = Op::kNumber;
    double number = 0.0;
    std::vector<Node> args;

    bool operator==(const Node& o) const {
      return op == o.op && number == o.number && args == o.args;
    }
  };

  Expression() = default;

  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    Expression e;
    e.source_ = std::string(text);
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) {
      throw ParseError("unexpected trailing input", p.pos);
    }
    return e;
  }

  double eval(double x) const { return eval_node(root_, x); }

  // Canonical printable form; parsing it back yields a structurally equal
  // expression.
  std::string str() const { return print_node(root_, 0); }

  const std::string& source() const { return source_; }
  const Node& root() const { return root_; }

  bool operator==(const Expression& o) const { return root_ == o.root_; }

  bool contains_var() const { return node_contains_var(root_); }

  // If the expression has no free variable, its (constant) value.
  std::optional<double> as_constant() const {
    if (contains_var()) return std::nullopt;
    return eval(0.0);
  }

 private:
  Node root_;
  std::string source_;

  struct Parser {
    std::string_view s;
    std::size_t pos;

    void skip_ws() {
      while (pos < s.size() &&
             std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      }
    }

    bool at(char c) {
      skip_ws();
      return pos < s.size() && s[pos] == c;
    }

    bool eat(char c) {
      if (at(c)) {
        ++pos;
        return true;
      }
      return false;
    }

    Node parse_expr() {
      Node lhs = parse_term();
      for (;;) {
        if (eat('+')) {
          Node rhs = parse_term();
          lhs = make2(Op::kAdd, std::move(lhs), std::move(rhs));
        } else if (eat('-')) {
          Node rhs = parse_term();
          lhs = make2(Op::kSub, std::move(lhs), std::move(rhs));
        } else {
          return lhs;
        }
      }
    }

    Node parse_term() {
      Node lhs = parse_factor();
      for (;;) {
        if (eat('*')) {
          Node rhs = parse_factor();
          lhs = make2(Op::kMul, std::move(lhs), std::move(rhs));
        } else if (eat('/')) {
          Node rhs = parse_factor();
          lhs = make2(Op::kDiv, std::move(lhs), std::move(rhs));
        } else {
          return lhs;
        }
      }
    }

    Node parse_factor() {
      Node base = parse_base();
      if (eat('^')) {
        Node exp = parse_factor();  // right-associative
        return make2(Op::kPow, std::move(base), std::move(exp));
      }
      return base;
    }

    Node parse_base() {
      skip_ws();
      if (pos >= s.size()) {
        throw ParseError("expected a value", pos);
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        return parse_number();
      }
      if (c == '(') {
        ++pos;
        Node inner = parse_expr();
        if (!eat(')')) {
          skip_ws();
          throw ParseError("expected ')'", pos);
        }
        return inner;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        return parse_ident();
      }
      throw ParseError("unexpected character", pos);
    }

    Node parse_number() {
      const std::size_t start = pos;
      while (pos < s.size() &&
             std::isdigit(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      }
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        if (pos >= s.size() ||
            !std::isdigit(static_cast<unsigned char>(s[pos]))) {
          throw ParseError("malformed number", pos);
        }
        while (pos < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[pos]))) {
          ++pos;
        }
      }
      if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        std::size_t mark = pos;
        ++pos;
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
        if (pos >= s.size() ||
            !std::isdigit(static_cast<unsigned char>(s[pos]))) {
          pos = mark;  // not an exponent; the 'e' belongs to what follows
        } else {
          while (pos < s.size() &&
                 std::isdigit(static_cast<unsigned char>(s[pos]))) {
            ++pos;
          }
        }
      }
      Node n;
      n.op = Op::kNumber;
      n.number = std::stod(std::string(s.substr(start, pos - start)));
      return n;
    }

    Node parse_ident() {
      const std::size_t start = pos;
      while (pos < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos])) ||
              s[pos] == '_')) {
        ++pos;
      }
      const std::string_view name = s.substr(start, pos - start);
      if (name == "x") {
        Node n;
        n.op = Op::kVar;
        return n;
      }
      Op op;
      std::size_t arity;
      if (name == "log") {
        op = Op::kLog;
        arity = 1;
      } else if (name == "exp") {
        op = Op::kExp;
        arity = 1;
      } else if (name == "sqrt") {
        op = Op::kSqrt;
        arity = 1;
      } else if (name == "abs") {
        op = Op::kAbs;
        arity = 1;
      } else if (name == "min") {
        op = Op::kMin;
        arity = 2;
      } else if (name == "max") {
        op = Op::kMax;
        arity = 2;
      } else {
        throw ParseError("unknown identifier '" + std::string(name) + "'",
                         start);
      }
      if (!eat('(')) {
        skip_ws();
        throw ParseError("expected '(' after function name", pos);
      }
      Node n;
      n.op = op;
      n.args.push_back(parse_expr());
      while (eat(',')) {
        n.args.push_back(parse_expr());
      }
      if (!eat(')')) {
        skip_ws();
        throw ParseError("expected ')'", pos);
      }
      if (n.args.size() != arity) {
        throw ParseError("function '" + std::string(name) + "' takes " +
                             std::to_string(arity) + " argument(s)",
                         start);
      }
      return n;
    }

    static Node make2(Op op, Node a, Node b) {
      Node n;
      n.op = op;
      n.args.push_back(std::move(a));
      n.args.push_back(std::move(b));
      return n;
    }
  };

  static bool node_contains_var(const Node& n) {
    if (n.op == Op::kVar) return true;
    for (const Node& a : n.args) {
      if (node_contains_var(a)) return true;
    }
    return false;
  }

  static double finite_or_throw(double v, const char* what, double x) {
    if (!std::isfinite(v)) throw EvalError(what, x);
    return v;
  }

  static double eval_node(const Node& n, double x) {
    switch (n.op) {
      case Op::kNumber:
        return n.number;
      case Op::kVar:
        return x;
      case Op::kAdd:
        return finite_or_throw(eval_node(n.args[0], x) + eval_node(n.args[1], x),
                               "non-finite sum", x);
      case Op::kSub:
        return finite_or_throw(eval_node(n.args[0], x) - eval_node(n.args[1], x),
                               "non-finite difference", x);
      case Op::kMul:
        return finite_or_throw(eval_node(n.args[0], x) * eval_node(n.args[1], x),
                               "non-finite product", x);
      case Op::kDiv: {
        const double d = eval_node(n.args[1], x);
        if (d == 0.0) throw EvalError("division by zero", x);
        return finite_or_throw(eval_node(n.args[0], x) / d,
                               "non-finite quotient", x);
      }
      case Op::kPow:
        return finite_or_throw(
            std::pow(eval_node(n.args[0], x), eval_node(n.args[1], x)),
            "non-finite power", x);
      case Op::kLog: {
        const double a = eval_node(n.args[0], x);
        if (a <= 0.0) throw EvalError("log of a non-positive value", x);
        return std::log(a);
      }
      case Op::kExp:
        return finite_or_throw(std::exp(eval_node(n.args[0], x)),
                               "non-finite exponential", x);
      case Op::kSqrt: {
        const double a = eval_node(n.args[0], x);
        if (a < 0.0) throw EvalError("sqrt of a negative value", x);
        return std::sqrt(a);
      }
      case Op::kAbs:
        return std::abs(eval_node(n.args[0], x));
      case Op::kMin:
        return std::min(eval_node(n.args[0], x), eval_node(n.args[1], x));
      case Op::kMax:
        return std::max(eval_node(n.args[0], x), eval_node(n.args[1], x));
    }
    throw Error("corrupt expression node");
  }

  static std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  // prec: 0 = additive context, 1 = multiplicative, 2 = power/base.
  static std::string print_node(const Node& n, int prec) {
    switch (n.op) {
      case Op::kNumber:
        return format_number(n.number);
      case Op::kVar:
        return "x";
      case Op::kAdd:
      case Op::kSub: {
        std::string s = print_node(n.args[0], 0) +
                        (n.op == Op::kAdd ? "+" : "-") +
                        print_node(n.args[1], 1);
        return prec > 0 ? "(" + s + ")" : s;
      }
      case Op::kMul:
      case Op::kDiv: {
        std::string s = print_node(n.args[0], 1) +
                        (n.op == Op::kMul ? "*" : "/") +
                        print_node(n.args[1], 2);
        return prec > 1 ? "(" + s + ")" : s;
      }
      case Op::kPow: {
        std::string s =
            print_node(n.args[0], 2) + "^" + print_node(n.args[1], 2);
        // A bare base^exp re-parses identically; parenthesize only when the
        // node is itself the base of an outer power (handled by prec == 2
        // plus the left operand always being a base).
        return "(" + s + ")";
      }
      case Op::kLog:
        return "log(" + print_node(n.args[0], 0) + ")";
      case Op::kExp:
        return "exp(" + print_node(n.args[0], 0) + ")";
      case Op::kSqrt:
        return "sqrt(" + print_node(n.args[0], 0) + ")";
      case Op::kAbs:
        return "abs(" + print_node(n.args[0], 0) + ")";
      case Op::kMin:
        return "min(" + print_node(n.args[0], 0) + "," +
               print_node(n.args[1], 0) + ")";
      case Op::kMax:
        return "max(" + print_node(n.args[0], 0) + "," +
               print_node(n.args[1], 0) + ")";
    }
    throw Error("corrupt expression node");
  }
};

}  // namespace cfdim
