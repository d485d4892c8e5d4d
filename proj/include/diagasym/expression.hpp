// Expression language for singular parts: a small AST over the variables
// u1..ud with real constants, +, -, *, /, real-exponent powers (principal
// branch) and sqrt.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' signed-real)?
//   base   := 'u'<int> | number | '(' expr ')' | 'sqrt(' expr ')'
#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "diagasym/types.hpp"

namespace diagasym {

// Syntax error carrying the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

// Evaluation error: zero base with negative exponent, branch-cut hit, etc.
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ExprKind { Variable, Constant, Add, Sub, Mul, Div, Pow, Sqrt };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  int var_index = 0;     // Variable: 1-based index
  double value = 0.0;    // Constant
  double exponent = 0.0; // Pow
  ExprPtr lhs, rhs;
};

class ExpressionAST {
 public:
  ExpressionAST() = default;
  ExpressionAST(ExprPtr root, int dim) : root_(std::move(root)), dim_(dim) {}

  const ExprPtr& root() const { return root_; }
  int dim() const { return dim_; }
  bool empty() const { return root_ == nullptr; }

 private:
  ExprPtr root_;
  int dim_ = 0;
};

namespace detail {

inline ExprPtr make_node(ExprNode n) {
  return std::make_shared<const ExprNode>(std::move(n));
}

class Parser {
 public:
  Parser(const std::string& text, int dim) : s_(text), d_(dim) {}

  ExprPtr parse() {
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  const std::string& s_;
  int d_;
  size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) { ++pos_; return true; }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos_);
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      if (accept('+')) {
        ExprPtr r = parse_term();
        e = make_node({ExprKind::Add, 0, 0.0, 0.0, e, r});
      } else if (accept('-')) {
        ExprPtr r = parse_term();
        e = make_node({ExprKind::Sub, 0, 0.0, 0.0, e, r});
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    for (;;) {
      if (accept('*')) {
        ExprPtr r = parse_factor();
        e = make_node({ExprKind::Mul, 0, 0.0, 0.0, e, r});
      } else if (accept('/')) {
        ExprPtr r = parse_factor();
        e = make_node({ExprKind::Div, 0, 0.0, 0.0, e, r});
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_factor() {
    ExprPtr b = parse_base();
    if (accept('^')) {
      double e = parse_signed_real();
      return make_node({ExprKind::Pow, 0, 0.0, e, b, nullptr});
    }
    return b;
  }

  ExprPtr parse_base() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr();
      expect(')', "to close parenthesis");
      return e;
    }
    if (s_.compare(pos_, 5, "sqrt(") == 0) {
      pos_ += 5;
      ExprPtr e = parse_expr();
      expect(')', "to close sqrt(");
      return make_node({ExprKind::Sqrt, 0, 0.0, 0.0, e, nullptr});
    }
    if (c == 'u') {
      size_t start = pos_;
      ++pos_;
      size_t digits = 0;
      int idx = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        idx = idx * 10 + (s_[pos_] - '0');
        ++pos_;
        ++digits;
        if (digits > 6) throw ParseError("variable index too long", start);
      }
      if (digits == 0) throw ParseError("expected variable index after 'u'", start);
      if (idx < 1 || idx > d_)
        throw ParseError("variable index out of range (dimension " +
                             std::to_string(d_) + ")",
                         start);
      return make_node({ExprKind::Variable, idx, 0.0, 0.0, nullptr, nullptr});
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = parse_unsigned_real();
      return make_node({ExprKind::Constant, 0, v, 0.0, nullptr, nullptr});
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  double parse_signed_real() {
    skip_ws();
    size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
    double mag = parse_unsigned_real();
    return (s_[start] == '-') ? -mag : mag;
  }

  double parse_unsigned_real() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      size_t mark = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' was not an exponent
      }
    }
    if (pos_ == start) throw ParseError("expected number", start);
    try {
      return std::stod(s_.substr(start, pos_ - start));
    } catch (const std::exception&) {
      throw ParseError("malformed number", start);
    }
  }
};

inline bool is_integer_exponent(double e) {
  return std::isfinite(e) && std::floor(e) == e && std::abs(e) < 1e9;
}

// Integer powers via binary powering; avoids spurious branch issues for
// negative real bases.
inline cplx ipow(cplx b, long long e) {
  if (e == 0) return cplx(1.0, 0.0);
  bool neg = e < 0;
  unsigned long long m = neg ? static_cast<unsigned long long>(-e)
                             : static_cast<unsigned long long>(e);
  cplx acc(1.0, 0.0), p = b;
  while (m) {
    if (m & 1ULL) acc *= p;
    p *= p;
    m >>= 1;
  }
  if (neg) {
    if (acc == cplx(0.0, 0.0)) throw EvalError("zero base with negative exponent");
    return cplx(1.0, 0.0) / acc;
  }
  return acc;
}

inline bool on_branch_cut(cplx b) { return b.imag() == 0.0 && b.real() < 0.0; }

struct EvalDiag {
  // Set when a power/sqrt base came suspiciously close to 0 relative to the
  // size of its operands, or landed on the cut: a branch-point inside the
  // sampled region.
  bool flagged = false;
  std::string message;

  void flag(const std::string& msg) {
    if (!flagged) { flagged = true; message = msg; }
  }
};

struct EvalValue {
  cplx v;
  double scale;  // magnitude scale of the subexpression, for cancellation tests
};

inline EvalValue eval_node(const ExprNode& n, const std::vector<cplx>& pt,
                           EvalDiag* diag) {
  switch (n.kind) {
    case ExprKind::Variable: {
      cplx v = pt[static_cast<size_t>(n.var_index - 1)];
      return {v, std::abs(v)};
    }
    case ExprKind::Constant:
      return {cplx(n.value, 0.0), std::abs(n.value)};
    case ExprKind::Add: {
      EvalValue a = eval_node(*n.lhs, pt, diag);
      EvalValue b = eval_node(*n.rhs, pt, diag);
      return {a.v + b.v, a.scale + b.scale};
    }
    case ExprKind::Sub: {
      EvalValue a = eval_node(*n.lhs, pt, diag);
      EvalValue b = eval_node(*n.rhs, pt, diag);
      return {a.v - b.v, a.scale + b.scale};
    }
    case ExprKind::Mul: {
      EvalValue a = eval_node(*n.lhs, pt, diag);
      EvalValue b = eval_node(*n.rhs, pt, diag);
      return {a.v * b.v, a.scale * b.scale};
    }
    case ExprKind::Div: {
      EvalValue a = eval_node(*n.lhs, pt, diag);
      EvalValue b = eval_node(*n.rhs, pt, diag);
      if (b.v == cplx(0.0, 0.0)) throw EvalError("division by zero");
      if (diag && std::abs(b.v) <= 1e-12 * b.scale)
        diag->flag("denominator nearly vanishes");
      return {a.v / b.v, a.scale / std::max(std::abs(b.v), 1e-300)};
    }
    case ExprKind::Pow: {
      EvalValue b = eval_node(*n.lhs, pt, diag);
      double e = n.exponent;
      if (is_integer_exponent(e)) {
        cplx r = ipow(b.v, static_cast<long long>(e));
        return {r, std::pow(std::max(b.scale, 1e-300), e)};
      }
      if (b.v == cplx(0.0, 0.0)) {
        if (diag) diag->flag("zero base of non-integer power");
        if (e < 0.0) throw EvalError("zero base with negative exponent");
        return {cplx(0.0, 0.0), 0.0};
      }
      if (on_branch_cut(b.v)) {
        if (diag) diag->flag("power base on the branch cut");
        throw EvalError("base on the branch cut with non-integer exponent");
      }
      if (diag && std::abs(b.v) <= 1e-12 * b.scale)
        diag->flag("power base nearly vanishes (branch point nearby)");
      return {std::pow(b.v, cplx(e, 0.0)), std::pow(std::max(b.scale, 1e-300), e)};
    }
    case ExprKind::Sqrt: {
      EvalValue b = eval_node(*n.lhs, pt, diag);
      if (b.v == cplx(0.0, 0.0)) {
        if (diag) diag->flag("zero base of sqrt");
        return {cplx(0.0, 0.0), 0.0};
      }
      if (on_branch_cut(b.v)) {
        if (diag) diag->flag("sqrt base on the branch cut");
        throw EvalError("base on the branch cut with non-integer exponent");
      }
      if (diag && std::abs(b.v) <= 1e-12 * b.scale)
        diag->flag("sqrt base nearly vanishes (branch point nearby)");
      return {std::sqrt(b.v), std::sqrt(std::max(b.scale, 1e-300))};
    }
  }
  throw EvalError("corrupt expression node");
}

inline int precedence(ExprKind k) {
  switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Pow: return 3;
    default: return 4;
  }
}

inline std::string format_real(double v) {
  // Shortest representation that round-trips and re-parses in the grammar.
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  std::string s(buf);
  // The grammar has no bare '+' exponent sign requirement; stod output like
  // "1e+06" re-parses fine, but normalize "1e+06" -> "1e6" for tidiness.
  auto p = s.find("e+");
  if (p != std::string::npos) s.erase(p + 1, 1);
  return s;
}

inline void print_node(const ExprNode& n, std::string& out) {
  auto child = [&](const ExprNode& c, bool needParens) {
    if (needParens) out += '(';
    print_node(c, out);
    if (needParens) out += ')';
  };
  switch (n.kind) {
    case ExprKind::Variable:
      out += 'u';
      out += std::to_string(n.var_index);
      return;
    case ExprKind::Constant:
      out += format_real(n.value);
      return;
    case ExprKind::Add:
      child(*n.lhs, false);
      out += '+';
      child(*n.rhs, precedence(n.rhs->kind) < 1);
      return;
    case ExprKind::Sub:
      child(*n.lhs, false);
      out += '-';
      child(*n.rhs, precedence(n.rhs->kind) <= 1);
      return;
    case ExprKind::Mul:
      child(*n.lhs, precedence(n.lhs->kind) < 2);
      out += '*';
      child(*n.rhs, precedence(n.rhs->kind) < 2);
      return;
    case ExprKind::Div:
      child(*n.lhs, precedence(n.lhs->kind) < 2);
      out += '/';
      child(*n.rhs, precedence(n.rhs->kind) <= 2);
      return;
    case ExprKind::Pow:
      child(*n.lhs, precedence(n.lhs->kind) <= 3);
      out += '^';
      out += format_real(n.exponent);
      return;
    case ExprKind::Sqrt:
      out += "sqrt(";
      print_node(*n.lhs, out);
      out += ')';
      return;
  }
}

}  // namespace detail

inline ExpressionAST parse_expression(const std::string& text, int dim) {
  if (dim < 1) throw DomainError("parse_expression: dimension must be >= 1");
  detail::Parser p(text, dim);
  return ExpressionAST(p.parse(), dim);
}

inline cplx eval_expression(const ExpressionAST& ast, const std::vector<cplx>& point) {
  if (ast.empty()) throw EvalError("empty expression");
  if (static_cast<int>(point.size()) != ast.dim())
    throw DomainError("eval_expression: point dimension mismatch");
  return detail::eval_node(*ast.root(), point, nullptr).v;
}

// Evaluation that also reports near-branch-point diagnostics; used by the
// zero-avoidance scan.
inline cplx eval_expression_diag(const ExpressionAST& ast,
                                 const std::vector<cplx>& point,
                                 detail::EvalDiag& diag) {
  if (ast.empty()) throw EvalError("empty expression");
  if (static_cast<int>(point.size()) != ast.dim())
    throw DomainError("eval_expression: point dimension mismatch");
  return detail::eval_node(*ast.root(), point, &diag).v;
}

inline std::string pretty_print(const ExpressionAST& ast) {
  std::string out;
  if (!ast.empty()) detail::print_node(*ast.root(), out);
  return out;
}

}  // namespace diagasym
