// Shared test helpers: seeded random generators for expressions, matrices and
// tangent points, plus a self-contained RK4 stepper kept independent of the
// library's integrator so it can serve as an oracle.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "kcclab/expr.hpp"
#include "kcclab/kcc.hpp"
#include "kcclab/linalg.hpp"

namespace testsupport {

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline kcclab::Mat2 random_matrix(std::mt19937& rng, double lo = -5.0, double hi = 5.0) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi),
          uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline kcclab::TangentPoint random_tangent_point(std::mt19937& rng, double range = 1.0) {
  return {uniform(rng, -range, range), uniform(rng, -range, range),
          uniform(rng, -range, range), uniform(rng, -range, range)};
}

/// Random expression tree in x1, x2 of bounded depth; leaves are small
/// constants or variables, inner nodes span the whole grammar.
inline kcclab::Expr random_expr(std::mt19937& rng, int depth) {
  using kcclab::Expr;
  std::uniform_int_distribution<int> leaf_pick(0, 3);
  if (depth <= 0 || leaf_pick(rng) == 0) {
    switch (leaf_pick(rng)) {
      case 0: return Expr::constant(uniform(rng, -3.0, 3.0));
      case 1: return Expr::variable(1);
      case 2: return Expr::variable(2);
      default: return Expr::constant(uniform(rng, 0.25, 2.0));
    }
  }
  std::uniform_int_distribution<int> op_pick(0, 10);
  const Expr a = random_expr(rng, depth - 1);
  const Expr b = random_expr(rng, depth - 1);
  switch (op_pick(rng)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    case 3: return a / b;
    case 4: return -a;
    case 5: return Expr::sin(a);
    case 6: return Expr::cos(a);
    case 7: return Expr::exp(a);
    case 8: return Expr::ln(a);
    case 9: return Expr::sqrt(a);
    default: {
      std::uniform_int_distribution<int> exp_pick(0, 3);
      const double exps[] = {2.0, 3.0, 0.5, -1.0};
      return Expr::pow(a, exps[exp_pick(rng)]);
    }
  }
}

/// Evaluation guarded against domain errors and blow-ups.
inline std::optional<double> guarded_eval(const kcclab::Expr& e, double x1, double x2,
                                          double cap = 1e6) {
  try {
    const double v = e.eval(x1, x2);
    if (!std::isfinite(v) || std::abs(v) > cap) return std::nullopt;
    return v;
  } catch (const kcclab::EvalError&) {
    return std::nullopt;
  }
}

/// Central finite difference of e at (x1, x2) along var (1 or 2).
inline std::optional<double> central_difference(const kcclab::Expr& e, int var, double x1,
                                                double x2, double h = 1e-6) {
  const double d1 = var == 1 ? h : 0.0;
  const double d2 = var == 2 ? h : 0.0;
  const auto plus = guarded_eval(e, x1 + d1, x2 + d2);
  const auto minus = guarded_eval(e, x1 - d1, x2 - d2);
  if (!plus || !minus) return std::nullopt;
  return (*plus - *minus) / (2.0 * h);
}

/// Plain RK4 stepper, written here independently of the library integrator.
template <std::size_t N>
std::array<double, N> oracle_rk4_step(
    const std::function<std::array<double, N>(const std::array<double, N>&)>& rhs,
    const std::array<double, N>& x, double h) {
  auto k1 = rhs(x);
  std::array<double, N> t;
  for (std::size_t i = 0; i < N; ++i) t[i] = x[i] + 0.5 * h * k1[i];
  auto k2 = rhs(t);
  for (std::size_t i = 0; i < N; ++i) t[i] = x[i] + 0.5 * h * k2[i];
  auto k3 = rhs(t);
  for (std::size_t i = 0; i < N; ++i) t[i] = x[i] + h * k3[i];
  auto k4 = rhs(t);
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

/// A small pool of in-scope systems used by corpus-wide structural checks.
inline std::vector<kcclab::SystemSpec> corpus_systems() {
  using kcclab::parse;
  using kcclab::ParseOptions;
  std::vector<kcclab::SystemSpec> out;
  out.emplace_back(parse("x2"), parse("-x1"));                        // harmonic
  out.emplace_back(parse("x2"), parse("-sin(x1)"));                   // pendulum
  out.emplace_back(parse("x1 + 2*x2"), parse("3*x1 + 4*x2"));         // generic linear
  out.emplace_back(parse("x2"), parse("x1 - x1^3"));                  // cubic (Duffing-like)
  out.emplace_back(parse("x1^2"), parse("x2^2"));                     // quadratic
  out.emplace_back(parse("x1"), parse("-x2"));                        // H = x1*x2 flow
  out.emplace_back(parse("sin(x1*x2)"), parse("cos(x1) - x2"));       // mixed smooth
  ParseOptions with_ab{{"a", "b"}, false};
  out.emplace_back(parse("a*x1", with_ab), parse("b*x2", with_ab),
                   kcclab::ParamBindings{{"a", 0.7}, {"b", -1.3}});   // parametric diagonal
  return out;
}

}  // namespace testsupport
