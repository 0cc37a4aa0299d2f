// Scalar expression trees over (x1, x2, y1, y2): parsing, symbolic
// differentiation, simplification and IEEE-double evaluation.
//
// Trees are immutable and shared; every mutating-looking operation returns a
// new tree. The simplifier is deliberately conservative: constant folding,
// 0/1 identities, sign normalization and cancellation of syntactically equal
// terms. No factoring, no trig rewriting.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kcclab {

/// Parameter name -> value bindings supplied at evaluation time.
using ParamBindings = std::map<std::string, double>;

enum class EvalErrorKind { DivByZero, LogNonpositive, SqrtNegative };

class EvalError : public std::runtime_error {
public:
  EvalError(EvalErrorKind kind, std::string where)
      : std::runtime_error(describe(kind) + " in '" + where + "'"),
        kind_(kind),
        where_(std::move(where)) {}

  EvalErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

private:
  static std::string describe(EvalErrorKind k) {
    switch (k) {
      case EvalErrorKind::DivByZero: return "division by zero";
      case EvalErrorKind::LogNonpositive: return "logarithm of non-positive value";
      case EvalErrorKind::SqrtNegative: return "square root of negative value";
    }
    return "evaluation error";
  }

  EvalErrorKind kind_;
  std::string where_;
};

/// Parse failure; `offset` is the byte offset of the first offending token.
class SyntaxError : public std::runtime_error {
public:
  SyntaxError(std::size_t offset, std::string expected)
      : std::runtime_error("syntax error at offset " + std::to_string(offset) +
                           ": expected " + expected),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

private:
  std::size_t offset_;
  std::string expected_;
};

/// Identifier that is neither a variable, a known function nor a declared parameter.
class UnknownIdentifier : public std::runtime_error {
public:
  UnknownIdentifier(std::string name, std::size_t offset)
      : std::runtime_error("unknown identifier '" + name + "' at offset " +
                           std::to_string(offset)),
        name_(std::move(name)),
        offset_(offset) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  std::string name_;
  std::size_t offset_;
};

class UnboundParameter : public std::runtime_error {
public:
  explicit UnboundParameter(std::string name)
      : std::runtime_error("parameter '" + name + "' has no bound value"),
        name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

namespace detail {

enum class Op {
  Constant,
  Variable,   // index 1..4 = x1, x2, y1, y2
  Parameter,
  Neg,
  Sin,
  Cos,
  Exp,
  Ln,
  Sqrt,
  Add,
  Sub,
  Mul,
  Div,
  Pow,        // constant real exponent stored in `value`
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0.0;  // Constant payload, Pow exponent
  int index = 0;       // Variable index
  std::string name;    // Parameter name
  NodePtr a;           // unary child / binary lhs / Pow base
  NodePtr b;           // binary rhs
};

inline NodePtr make_constant(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite constant");
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = v;
  return n;
}

inline NodePtr make_variable(int index) {
  if (index < 1 || index > 4) throw std::invalid_argument("variable index out of range");
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->index = index;
  return n;
}

inline NodePtr make_parameter(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Parameter;
  n->name = std::move(name);
  return n;
}

inline NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr, double value = 0.0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline bool is_const(const NodePtr& n, double v) {
  return n->op == Op::Constant && n->value == v;
}

inline bool is_zero(const NodePtr& n) { return is_const(n, 0.0); }

/// Structural equality treating Add and Mul as commutative. Exact on constants.
inline bool equal_commutative(const NodePtr& x, const NodePtr& y) {
  if (x == y) return true;
  if (x->op != y->op) return false;
  switch (x->op) {
    case Op::Constant: return x->value == y->value;
    case Op::Variable: return x->index == y->index;
    case Op::Parameter: return x->name == y->name;
    case Op::Pow:
      return x->value == y->value && equal_commutative(x->a, y->a);
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Ln:
    case Op::Sqrt:
      return equal_commutative(x->a, y->a);
    case Op::Add:
    case Op::Mul:
      return (equal_commutative(x->a, y->a) && equal_commutative(x->b, y->b)) ||
             (equal_commutative(x->a, y->b) && equal_commutative(x->b, y->a));
    case Op::Sub:
    case Op::Div:
      return equal_commutative(x->a, y->a) && equal_commutative(x->b, y->b);
  }
  return false;
}

/// Splits a factory-normalized node into (sign, unsigned core).
/// Only outermost Neg and a negative constant coefficient carry sign.
inline std::pair<int, NodePtr> sign_core(const NodePtr& n) {
  if (n->op == Op::Neg) return {-1, n->a};
  if (n->op == Op::Constant && n->value < 0.0) return {-1, make_constant(-n->value)};
  if (n->op == Op::Mul && n->a->op == Op::Constant && n->a->value < 0.0)
    return {-1, make_node(Op::Mul, make_constant(-n->a->value), n->b)};
  return {1, n};
}

/// Flattens the Add/Sub/Neg spine into signed terms (cores have sign stripped).
inline void sum_terms(const NodePtr& n, int sign, std::vector<std::pair<int, NodePtr>>& out) {
  if (n->op == Op::Add) {
    sum_terms(n->a, sign, out);
    sum_terms(n->b, sign, out);
    return;
  }
  if (n->op == Op::Sub) {
    sum_terms(n->a, sign, out);
    sum_terms(n->b, -sign, out);
    return;
  }
  if (n->op == Op::Neg) {
    sum_terms(n->a, -sign, out);
    return;
  }
  auto [s, core] = sign_core(n);
  out.emplace_back(sign * s, core);
}

/// True when the two sums consist of pairwise matching signed terms.
inline bool equal_as_sum(const NodePtr& x, const NodePtr& y) {
  std::vector<std::pair<int, NodePtr>> tx, ty;
  sum_terms(x, 1, tx);
  sum_terms(y, 1, ty);
  if (tx.size() != ty.size()) return false;
  std::vector<bool> used(ty.size(), false);
  for (const auto& [sx, cx] : tx) {
    bool matched = false;
    for (std::size_t j = 0; j < ty.size(); ++j) {
      if (used[j] || ty[j].first != sx) continue;
      if (equal_commutative(cx, ty[j].second)) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

// --- simplifying factories -------------------------------------------------
// Children are assumed to be factory-normal already; the rules below keep the
// tree in that form. Constant folds are skipped when the result would be
// non-finite or outside the operation's domain.

NodePtr neg(NodePtr u);
NodePtr add(NodePtr l, NodePtr r);
NodePtr sub(NodePtr l, NodePtr r);
NodePtr mul(NodePtr l, NodePtr r);
NodePtr quot(NodePtr l, NodePtr r);
NodePtr pw(NodePtr u, double k);

inline NodePtr neg(NodePtr u) {
  if (u->op == Op::Constant) return make_constant(-u->value);
  if (u->op == Op::Neg) return u->a;
  return make_node(Op::Neg, std::move(u));
}

inline NodePtr add(NodePtr l, NodePtr r) {
  if (l->op == Op::Constant && r->op == Op::Constant) {
    double v = l->value + r->value;
    if (std::isfinite(v)) return make_constant(v);
  }
  if (is_zero(l)) return r;
  if (is_zero(r)) return l;
  auto [sl, cl] = sign_core(l);
  auto [sr, cr] = sign_core(r);
  if (sl == -sr && equal_commutative(cl, cr)) return make_constant(0.0);
  if (sr < 0 && equal_as_sum(l, cr)) return make_constant(0.0);
  return make_node(Op::Add, std::move(l), std::move(r));
}

inline NodePtr sub(NodePtr l, NodePtr r) {
  if (l->op == Op::Constant && r->op == Op::Constant) {
    double v = l->value - r->value;
    if (std::isfinite(v)) return make_constant(v);
  }
  if (is_zero(r)) return l;
  if (is_zero(l)) return neg(std::move(r));
  auto [sl, cl] = sign_core(l);
  auto [sr, cr] = sign_core(r);
  if (sl == sr && equal_commutative(cl, cr)) return make_constant(0.0);
  if (equal_as_sum(l, r)) return make_constant(0.0);
  return make_node(Op::Sub, std::move(l), std::move(r));
}

inline NodePtr mul(NodePtr l, NodePtr r) {
  if (l->op == Op::Neg) return neg(mul(l->a, std::move(r)));
  if (r->op == Op::Neg) return neg(mul(std::move(l), r->a));
  if (l->op == Op::Constant && r->op == Op::Constant) {
    double v = l->value * r->value;
    if (std::isfinite(v)) return make_constant(v);
  }
  if (is_zero(l) || is_zero(r)) return make_constant(0.0);
  if (is_const(l, 1.0)) return r;
  if (is_const(r, 1.0)) return l;
  if (is_const(l, -1.0)) return neg(std::move(r));
  if (is_const(r, -1.0)) return neg(std::move(l));
  if (r->op == Op::Constant && l->op != Op::Constant) std::swap(l, r);
  if (l->op == Op::Constant && r->op == Op::Mul && r->a->op == Op::Constant) {
    double v = l->value * r->a->value;
    if (std::isfinite(v)) return mul(make_constant(v), r->b);
  }
  return make_node(Op::Mul, std::move(l), std::move(r));
}

inline NodePtr quot(NodePtr l, NodePtr r) {
  if (l->op == Op::Neg) return neg(quot(l->a, std::move(r)));
  if (r->op == Op::Neg) return neg(quot(std::move(l), r->a));
  if (r->op == Op::Constant && r->value != 0.0) {
    if (l->op == Op::Constant) {
      double v = l->value / r->value;
      if (std::isfinite(v)) return make_constant(v);
    }
    if (is_const(r, 1.0)) return l;
    if (is_const(r, -1.0)) return neg(std::move(l));
    if (l->op == Op::Mul && l->a->op == Op::Constant) {
      double v = l->a->value / r->value;
      if (std::isfinite(v)) return mul(make_constant(v), l->b);
    }
  }
  if (is_zero(l) && !(r->op == Op::Constant && r->value == 0.0)) return make_constant(0.0);
  return make_node(Op::Div, std::move(l), std::move(r));
}

inline NodePtr pw(NodePtr u, double k) {
  if (!std::isfinite(k)) throw std::invalid_argument("non-finite exponent");
  if (k == 0.0) return make_constant(1.0);
  if (k == 1.0) return u;
  if (u->op == Op::Constant) {
    double c = u->value;
    bool integral = std::nearbyint(k) == k;
    bool domain_ok = (c > 0.0) || (c == 0.0 && k > 0.0) || (c < 0.0 && integral);
    if (domain_ok) {
      double v = std::pow(c, k);
      if (std::isfinite(v)) return make_constant(v);
    }
  }
  return make_node(Op::Pow, std::move(u), nullptr, k);
}

inline NodePtr unary(Op op, NodePtr u) {
  if (u->op == Op::Constant) {
    double c = u->value;
    switch (op) {
      case Op::Sin: return make_constant(std::sin(c));
      case Op::Cos: return make_constant(std::cos(c));
      case Op::Exp: {
        double v = std::exp(c);
        if (std::isfinite(v)) return make_constant(v);
        break;
      }
      case Op::Ln:
        if (c > 0.0) return make_constant(std::log(c));
        break;
      case Op::Sqrt:
        if (c >= 0.0) return make_constant(std::sqrt(c));
        break;
      default: break;
    }
  }
  return make_node(op, std::move(u));
}

inline NodePtr simplify(const NodePtr& n) {
  switch (n->op) {
    case Op::Constant:
    case Op::Variable:
    case Op::Parameter:
      return n;
    case Op::Neg: return neg(simplify(n->a));
    case Op::Sin: return unary(Op::Sin, simplify(n->a));
    case Op::Cos: return unary(Op::Cos, simplify(n->a));
    case Op::Exp: return unary(Op::Exp, simplify(n->a));
    case Op::Ln: return unary(Op::Ln, simplify(n->a));
    case Op::Sqrt: return unary(Op::Sqrt, simplify(n->a));
    case Op::Add: return add(simplify(n->a), simplify(n->b));
    case Op::Sub: return sub(simplify(n->a), simplify(n->b));
    case Op::Mul: return mul(simplify(n->a), simplify(n->b));
    case Op::Div: return quot(simplify(n->a), simplify(n->b));
    case Op::Pow: return pw(simplify(n->a), n->value);
  }
  return n;
}

/// Symbolic partial derivative. Expects a factory-normal tree.
inline NodePtr diff(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::Constant:
    case Op::Parameter:
      return make_constant(0.0);
    case Op::Variable:
      return make_constant(n->index == var ? 1.0 : 0.0);
    case Op::Neg: return neg(diff(n->a, var));
    case Op::Sin: return mul(unary(Op::Cos, n->a), diff(n->a, var));
    case Op::Cos: return neg(mul(unary(Op::Sin, n->a), diff(n->a, var)));
    case Op::Exp: return mul(n, diff(n->a, var));
    case Op::Ln: return quot(diff(n->a, var), n->a);
    case Op::Sqrt: return quot(diff(n->a, var), mul(make_constant(2.0), n));
    case Op::Add: return add(diff(n->a, var), diff(n->b, var));
    case Op::Sub: return sub(diff(n->a, var), diff(n->b, var));
    case Op::Mul:
      return add(mul(diff(n->a, var), n->b), mul(n->a, diff(n->b, var)));
    case Op::Div:
      return quot(sub(mul(diff(n->a, var), n->b), mul(n->a, diff(n->b, var))),
                  mul(n->b, n->b));
    case Op::Pow:
      return mul(mul(make_constant(n->value), pw(n->a, n->value - 1.0)),
                 diff(n->a, var));
  }
  return make_constant(0.0);
}

inline double eval(const Node& n, double x1, double x2, double y1, double y2,
                   const ParamBindings& params);

inline std::string to_string(const Node& n, int need);

inline double eval(const Node& n, double x1, double x2, double y1, double y2,
                   const ParamBindings& params) {
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Variable:
      switch (n.index) {
        case 1: return x1;
        case 2: return x2;
        case 3: return y1;
        default: return y2;
      }
    case Op::Parameter: {
      auto it = params.find(n.name);
      if (it == params.end()) throw UnboundParameter(n.name);
      return it->second;
    }
    case Op::Neg: return -eval(*n.a, x1, x2, y1, y2, params);
    case Op::Sin: return std::sin(eval(*n.a, x1, x2, y1, y2, params));
    case Op::Cos: return std::cos(eval(*n.a, x1, x2, y1, y2, params));
    case Op::Exp: return std::exp(eval(*n.a, x1, x2, y1, y2, params));
    case Op::Ln: {
      double v = eval(*n.a, x1, x2, y1, y2, params);
      if (v <= 0.0) throw EvalError(EvalErrorKind::LogNonpositive, to_string(n, 0));
      return std::log(v);
    }
    case Op::Sqrt: {
      double v = eval(*n.a, x1, x2, y1, y2, params);
      if (v < 0.0) throw EvalError(EvalErrorKind::SqrtNegative, to_string(n, 0));
      return std::sqrt(v);
    }
    case Op::Add:
      return eval(*n.a, x1, x2, y1, y2, params) + eval(*n.b, x1, x2, y1, y2, params);
    case Op::Sub:
      return eval(*n.a, x1, x2, y1, y2, params) - eval(*n.b, x1, x2, y1, y2, params);
    case Op::Mul:
      return eval(*n.a, x1, x2, y1, y2, params) * eval(*n.b, x1, x2, y1, y2, params);
    case Op::Div: {
      double num = eval(*n.a, x1, x2, y1, y2, params);
      double den = eval(*n.b, x1, x2, y1, y2, params);
      if (den == 0.0) throw EvalError(EvalErrorKind::DivByZero, to_string(n, 0));
      return num / den;
    }
    case Op::Pow: {
      double base = eval(*n.a, x1, x2, y1, y2, params);
      double k = n.value;
      if (base == 0.0 && k < 0.0)
        throw EvalError(EvalErrorKind::DivByZero, to_string(n, 0));
      if (base < 0.0 && std::nearbyint(k) != k)
        throw EvalError(EvalErrorKind::SqrtNegative, to_string(n, 0));
      return std::pow(base, k);
    }
  }
  return 0.0;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Printer precedence levels mirror the grammar: 1 expr, 2 term, 3 factor, 4 base.
inline std::string to_string(const Node& n, int need) {
  auto wrap = [&](int level, std::string s) {
    if (level < need) return "(" + std::move(s) + ")";
    return s;
  };
  switch (n.op) {
    case Op::Constant: {
      std::string s = format_double(n.value);
      return (n.value < 0.0) ? wrap(0, std::move(s)) : s;
    }
    case Op::Variable: {
      static const char* names[] = {"x1", "x2", "y1", "y2"};
      return names[n.index - 1];
    }
    case Op::Parameter: return n.name;
    case Op::Neg: return wrap(3, "-" + to_string(*n.a, 3));
    case Op::Sin: return "sin(" + to_string(*n.a, 1) + ")";
    case Op::Cos: return "cos(" + to_string(*n.a, 1) + ")";
    case Op::Exp: return "exp(" + to_string(*n.a, 1) + ")";
    case Op::Ln: return "ln(" + to_string(*n.a, 1) + ")";
    case Op::Sqrt: return "sqrt(" + to_string(*n.a, 1) + ")";
    case Op::Add: return wrap(1, to_string(*n.a, 1) + " + " + to_string(*n.b, 2));
    case Op::Sub: return wrap(1, to_string(*n.a, 1) + " - " + to_string(*n.b, 2));
    case Op::Mul: return wrap(2, to_string(*n.a, 2) + "*" + to_string(*n.b, 3));
    case Op::Div: return wrap(2, to_string(*n.a, 2) + "/" + to_string(*n.b, 3));
    case Op::Pow: return wrap(3, to_string(*n.a, 4) + "^" + format_double(n.value));
  }
  return {};
}

inline bool contains_pole_op(const Node& n) {
  switch (n.op) {
    case Op::Constant:
    case Op::Variable:
    case Op::Parameter:
      return false;
    case Op::Div:
    case Op::Ln:
      return true;
    case Op::Sqrt:
      return true;
    case Op::Pow:
      if (n.value < 0.0 || std::nearbyint(n.value) != n.value) return true;
      return contains_pole_op(*n.a);
    default:
      if (n.a && contains_pole_op(*n.a)) return true;
      if (n.b && contains_pole_op(*n.b)) return true;
      return false;
  }
}

inline void collect_parameters(const Node& n, std::set<std::string>& out) {
  if (n.op == Op::Parameter) out.insert(n.name);
  if (n.a) collect_parameters(*n.a, out);
  if (n.b) collect_parameters(*n.b, out);
}

inline bool references_variable(const Node& n, int index) {
  if (n.op == Op::Variable) return n.index == index;
  if (n.a && references_variable(*n.a, index)) return true;
  if (n.b && references_variable(*n.b, index)) return true;
  return false;
}

}  // namespace detail

struct ParseOptions;

/// Immutable scalar expression in up to four variables (x1, x2, y1, y2).
/// Values are cheap to copy and safe to share across threads.
class Expr {
public:
  Expr() : node_(detail::make_constant(0.0)) {}

  static Expr constant(double v) { return Expr(detail::make_constant(v)); }
  static Expr variable(int index) { return Expr(detail::make_variable(index)); }
  static Expr parameter(std::string name) {
    return Expr(detail::make_parameter(std::move(name)));
  }
  static Expr pow(const Expr& base, double exponent) {
    return Expr(detail::pw(base.node_, exponent));
  }
  static Expr sin(const Expr& e) { return Expr(detail::unary(detail::Op::Sin, e.node_)); }
  static Expr cos(const Expr& e) { return Expr(detail::unary(detail::Op::Cos, e.node_)); }
  static Expr exp(const Expr& e) { return Expr(detail::unary(detail::Op::Exp, e.node_)); }
  static Expr ln(const Expr& e) { return Expr(detail::unary(detail::Op::Ln, e.node_)); }
  static Expr sqrt(const Expr& e) { return Expr(detail::unary(detail::Op::Sqrt, e.node_)); }

  friend Expr operator+(const Expr& l, const Expr& r) {
    return Expr(detail::add(l.node_, r.node_));
  }
  friend Expr operator-(const Expr& l, const Expr& r) {
    return Expr(detail::sub(l.node_, r.node_));
  }
  friend Expr operator*(const Expr& l, const Expr& r) {
    return Expr(detail::mul(l.node_, r.node_));
  }
  friend Expr operator/(const Expr& l, const Expr& r) {
    return Expr(detail::quot(l.node_, r.node_));
  }
  Expr operator-() const { return Expr(detail::neg(node_)); }

  /// Partial derivative with respect to variable `var` in 1..4, simplified.
  Expr diff(int var) const {
    if (var < 1 || var > 4) throw std::invalid_argument("derivative variable out of range");
    return Expr(detail::diff(detail::simplify(node_), var));
  }

  Expr simplified() const { return Expr(detail::simplify(node_)); }

  double eval(double x1, double x2, const ParamBindings& params = {}) const {
    return detail::eval(*node_, x1, x2, 0.0, 0.0, params);
  }
  double eval(double x1, double x2, double y1, double y2,
              const ParamBindings& params = {}) const {
    return detail::eval(*node_, x1, x2, y1, y2, params);
  }

  /// Canonical text form; re-parsing it evaluates identically.
  std::string str() const { return detail::to_string(*node_, 0); }

  bool is_zero() const { return detail::is_zero(node_); }
  bool is_constant() const { return node_->op == detail::Op::Constant; }
  double constant_value() const {
    if (!is_constant()) throw std::logic_error("expression is not a constant");
    return node_->value;
  }

  /// True when evaluation can hit a pole (division, ln, sqrt, non-integer or
  /// negative powers). Used as a domain warning on derivatives.
  bool has_domain_risk() const { return detail::contains_pole_op(*node_); }

  std::set<std::string> parameters() const {
    std::set<std::string> out;
    detail::collect_parameters(*node_, out);
    return out;
  }

  bool depends_on(int variable_index) const {
    return detail::references_variable(*node_, variable_index);
  }

  const detail::NodePtr& node() const { return node_; }

private:
  explicit Expr(detail::NodePtr node) : node_(std::move(node)) {}

  friend Expr parse(std::string_view, const ParseOptions&);

  detail::NodePtr node_;
};

/// Commutative/associative structural equality of two expressions as sums.
inline bool structurally_equal(const Expr& a, const Expr& b) {
  return detail::equal_as_sum(a.node(), b.node());
}

struct ParseOptions {
  std::set<std::string> parameters;
  /// Accept `x` and `p` as aliases of x1 and x2 (Hamiltonian input mode).
  bool hamiltonian_aliases = false;
};

namespace detail {

class Parser {
public:
  Parser(std::string_view src, const ParseOptions& opts) : src_(src), opts_(opts) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_ws();
    if (pos_ != src_.size()) throw SyntaxError(pos_, "end of input or operator");
    return e;
  }

private:
  // expr := term (("+"|"-") term)*
  NodePtr expression() {
    NodePtr left = term();
    for (;;) {
      skip_ws();
      if (consume('+')) {
        left = make_node(Op::Add, left, term());
      } else if (consume('-')) {
        left = make_node(Op::Sub, left, term());
      } else {
        return left;
      }
    }
  }

  // term := factor (("*"|"/") factor)*
  NodePtr term() {
    NodePtr left = factor();
    for (;;) {
      skip_ws();
      if (consume('*')) {
        left = make_node(Op::Mul, left, factor());
      } else if (consume('/')) {
        left = make_node(Op::Div, left, factor());
      } else {
        return left;
      }
    }
  }

  // factor := base ("^" ["-"] number)?  with unary minus binding looser than "^"
  NodePtr factor() {
    skip_ws();
    if (consume('-')) return make_node(Op::Neg, factor());
    NodePtr b = base();
    skip_ws();
    if (consume('^')) {
      skip_ws();
      bool negated = consume('-');
      skip_ws();
      double k = number();
      return make_node(Op::Pow, b, nullptr, negated ? -k : k);
    }
    return b;
  }

  // base := number | ident | "(" expr ")" | fn base
  NodePtr base() {
    skip_ws();
    if (pos_ >= src_.size())
      throw SyntaxError(pos_, "number, identifier, '(', '-' or function");
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      return make_constant(number());
    }
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      skip_ws();
      if (!consume(')')) throw SyntaxError(pos_, "')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      std::string name = identifier();
      if (name == "sin") return make_node(Op::Sin, base());
      if (name == "cos") return make_node(Op::Cos, base());
      if (name == "exp") return make_node(Op::Exp, base());
      if (name == "ln") return make_node(Op::Ln, base());
      if (name == "sqrt") return make_node(Op::Sqrt, base());
      if (name == "x1") return make_variable(1);
      if (name == "x2") return make_variable(2);
      if (opts_.hamiltonian_aliases && name == "x") return make_variable(1);
      if (opts_.hamiltonian_aliases && name == "p") return make_variable(2);
      if (opts_.parameters.count(name)) return make_parameter(name);
      throw UnknownIdentifier(name, start);
    }
    throw SyntaxError(pos_, "number, identifier, '(', '-' or function");
  }

  double number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && src_[start] == '.'))
      throw SyntaxError(start, "number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // "2e" is the number 2 followed by an identifier
      }
    }
    return std::strtod(std::string(src_.substr(start, pos_ - start)).c_str(), nullptr);
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string_view src_;
  const ParseOptions& opts_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the expression grammar. Throws SyntaxError / UnknownIdentifier.
/// The returned tree is the literal parse; call simplified() for normal form.
inline Expr parse(std::string_view source, const ParseOptions& options) {
  detail::Parser p(source, options);
  return Expr(p.parse());
}

inline Expr parse(std::string_view source) { return parse(source, ParseOptions{}); }

}  // namespace kcclab
