// Geometrization of a planar first-order system on the tangent bundle: the
// second-order lift, the nonlinear connection, and the five invariants of the
// lifted system.
//
// Lift convention: d^2 x^i/dt^2 + 2 G^i = 0 with (G^1, G^2) = -1/2 J(f,g) y,
// so the connection N^i_j = dG^i/dy^j equals -1/2 J and the Berwald
// connection dN/dy vanishes identically. The scope is autonomous systems;
// the dN/dt term of the general deviation-curvature formula is dropped and
// the assumption is recorded on the evaluated data.

#pragma once

#include <array>
#include <optional>
#include <utility>

#include "kcclab/expr.hpp"
#include "kcclab/linalg.hpp"

namespace kcclab {

/// A point (x1, x2, y1, y2) of the tangent bundle.
struct TangentPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
};

using Tensor2x2x2 = std::array<std::array<std::array<double, 2>, 2>, 2>;
using Tensor2x2x2x2 = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

/// Planar autonomous system dx1/dt = f, dx2/dt = g with all symbolic
/// derivative caches prepared at construction. Immutable afterwards; every
/// evaluation below is a pure function of the point, safe to run in parallel.
class SystemSpec {
public:
  SystemSpec(Expr f, Expr g, ParamBindings params = {},
             std::optional<Expr> hamiltonian = {})
      : f_(std::move(f)),
        g_(std::move(g)),
        params_(std::move(params)),
        hamiltonian_(std::move(hamiltonian)) {
    const Expr y[2] = {Expr::variable(3), Expr::variable(4)};
    const Expr rhs[2] = {f_, g_};

    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) jac_[i][j] = rhs[i].diff(j + 1);

    for (int w = 0; w < 2; ++w)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) hess_[w][j][k] = jac_[w][j].diff(k + 1);

    const Expr minus_half = Expr::constant(-0.5);
    for (int i = 0; i < 2; ++i)
      spray_[i] = minus_half * (jac_[i][0] * y[0] + jac_[i][1] * y[1]);

    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        conn_[i][j] = spray_[i].diff(j + 3);
        dgdx_[i][j] = spray_[i].diff(j + 1);
        for (int l = 0; l < 2; ++l) {
          berwald_[i][j][l] = conn_[i][j].diff(l + 3);
          dndx_[i][j][l] = conn_[i][j].diff(l + 1);
        }
      }

    const Expr two = Expr::constant(2.0);
    for (int i = 0; i < 2; ++i) {
      first_inv_[i] = two * spray_[i] - (conn_[i][0] * y[0] + conn_[i][1] * y[1]);
      for (int j = 0; j < 2; ++j) {
        Expr acc = Expr::constant(-2.0) * dgdx_[i][j];
        for (int l = 0; l < 2; ++l) {
          acc = acc - two * (spray_[l] * berwald_[i][j][l]);
          acc = acc + y[l] * dndx_[i][j][l];
          acc = acc + conn_[i][l] * conn_[l][j];
        }
        p_[i][j] = acc.simplified();
      }
    }

    const Expr third = Expr::constant(1.0 / 3.0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          p3_[i][j][k] = third * (p_[i][j].diff(k + 3) - p_[i][k].diff(j + 3));
          for (int l = 0; l < 2; ++l) {
            p4_[i][j][k][l] = p3_[i][j][k].diff(l + 3);
            douglas_[i][j][k][l] = berwald_[i][j][k].diff(l + 3);
          }
        }
  }

  const Expr& f() const { return f_; }
  const Expr& g() const { return g_; }
  const ParamBindings& params() const { return params_; }
  /// Set when the system was derived from a Hamiltonian; enables energy checks.
  const std::optional<Expr>& hamiltonian() const { return hamiltonian_; }

  // Symbolic caches; indices are 0-based.
  const Expr& jacobian_entry(int i, int j) const { return jac_[i][j]; }
  const Expr& spray_entry(int i) const { return spray_[i]; }
  const Expr& connection_entry(int i, int j) const { return conn_[i][j]; }
  const Expr& berwald_entry(int i, int j, int l) const { return berwald_[i][j][l]; }
  const Expr& spray_x_derivative(int i, int j) const { return dgdx_[i][j]; }
  const Expr& first_invariant_entry(int i) const { return first_inv_[i]; }
  const Expr& deviation_entry(int i, int j) const { return p_[i][j]; }
  const Expr& third_invariant_entry(int i, int j, int k) const { return p3_[i][j][k]; }
  const Expr& fourth_invariant_entry(int i, int j, int k, int l) const {
    return p4_[i][j][k][l];
  }
  const Expr& douglas_entry(int i, int j, int k, int l) const {
    return douglas_[i][j][k][l];
  }
  /// Hessian of f (w = 0) or g (w = 1).
  const Expr& hessian_entry(int w, int j, int k) const { return hess_[w][j][k]; }

  double eval(const Expr& e, const TangentPoint& p) const {
    return e.eval(p.x1, p.x2, p.y1, p.y2, params_);
  }

  Vec2 rhs(Vec2 x) const {
    return {f_.eval(x.v1, x.v2, params_), g_.eval(x.v1, x.v2, params_)};
  }

  Mat2 jacobian_at(double x1, double x2) const {
    TangentPoint p{x1, x2, 0.0, 0.0};
    return {eval(jac_[0][0], p), eval(jac_[0][1], p),
            eval(jac_[1][0], p), eval(jac_[1][1], p)};
  }

private:
  Expr f_, g_;
  ParamBindings params_;
  std::optional<Expr> hamiltonian_;
  Expr jac_[2][2];
  Expr hess_[2][2][2];
  Expr spray_[2];
  Expr conn_[2][2];
  Expr dgdx_[2][2];
  Expr dndx_[2][2][2];
  Expr berwald_[2][2][2];
  Expr first_inv_[2];
  Expr p_[2][2];
  Expr p3_[2][2][2];
  Expr p4_[2][2][2][2];
  Expr douglas_[2][2][2][2];
};

/// The lifted second-order system d^2 x^i/dt^2 + 2 G^i = 0.
struct SecondOrderLift {
  Expr g1;
  Expr g2;
};

inline SecondOrderLift lift(const SystemSpec& sys) {
  return {sys.spray_entry(0), sys.spray_entry(1)};
}

inline Vec2 spray_at(const SystemSpec& sys, const TangentPoint& p) {
  return {sys.eval(sys.spray_entry(0), p), sys.eval(sys.spray_entry(1), p)};
}

inline Mat2 connection_at(const SystemSpec& sys, const TangentPoint& p) {
  return {sys.eval(sys.connection_entry(0, 0), p), sys.eval(sys.connection_entry(0, 1), p),
          sys.eval(sys.connection_entry(1, 0), p), sys.eval(sys.connection_entry(1, 1), p)};
}

inline Vec2 first_invariant_at(const SystemSpec& sys, const TangentPoint& p) {
  return {sys.eval(sys.first_invariant_entry(0), p),
          sys.eval(sys.first_invariant_entry(1), p)};
}

/// Deviation curvature P^i_j evaluated from the assembled general formula.
inline Mat2 deviation_curvature(const SystemSpec& sys, const TangentPoint& p) {
  return {sys.eval(sys.deviation_entry(0, 0), p), sys.eval(sys.deviation_entry(0, 1), p),
          sys.eval(sys.deviation_entry(1, 0), p), sys.eval(sys.deviation_entry(1, 1), p)};
}

/// Cross-check assembly of P from the Hessian block form:
/// row i of the first term is 1/2 (Hess(w_i) y)^T with w = (f, g), plus J^2/4.
/// The row-wise reading is the one consistent with the direct formula.
inline Mat2 deviation_curvature_hessian_form(const SystemSpec& sys, const TangentPoint& p) {
  const double y[2] = {p.y1, p.y2};
  double first[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 2; ++k) acc += sys.eval(sys.hessian_entry(i, j, k), p) * y[k];
      first[i][j] = 0.5 * acc;
    }
  const Mat2 jac = sys.jacobian_at(p.x1, p.x2);
  const Mat2 jsq = jac * jac;
  return {first[0][0] + 0.25 * jsq.a11, first[0][1] + 0.25 * jsq.a12,
          first[1][0] + 0.25 * jsq.a21, first[1][1] + 0.25 * jsq.a22};
}

inline Tensor2x2x2 berwald_at(const SystemSpec& sys, const TangentPoint& p) {
  Tensor2x2x2 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) out[i][j][l] = sys.eval(sys.berwald_entry(i, j, l), p);
  return out;
}

inline Tensor2x2x2 third_invariant_at(const SystemSpec& sys, const TangentPoint& p) {
  Tensor2x2x2 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        out[i][j][k] = sys.eval(sys.third_invariant_entry(i, j, k), p);
  return out;
}

inline Tensor2x2x2x2 fourth_invariant_at(const SystemSpec& sys, const TangentPoint& p) {
  Tensor2x2x2x2 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          out[i][j][k][l] = sys.eval(sys.fourth_invariant_entry(i, j, k, l), p);
  return out;
}

/// The third, fourth and fifth invariants together.
struct HigherInvariants {
  Tensor2x2x2 third;
  Tensor2x2x2x2 fourth;
  Tensor2x2x2x2 douglas;
};

inline Tensor2x2x2x2 douglas_at(const SystemSpec& sys, const TangentPoint& p) {
  Tensor2x2x2x2 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out[i][j][k][l] = sys.eval(sys.douglas_entry(i, j, k, l), p);
  return out;
}

inline HigherInvariants higher_invariants_at(const SystemSpec& sys,
                                             const TangentPoint& p) {
  return {third_invariant_at(sys, p), fourth_invariant_at(sys, p), douglas_at(sys, p)};
}

/// Symbolic structural zeros: exact for every system in scope since the spray
/// is linear in y.
inline bool berwald_identically_zero(const SystemSpec& sys) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l)
        if (!sys.berwald_entry(i, j, l).is_zero()) return false;
  return true;
}

inline bool fourth_invariant_identically_zero(const SystemSpec& sys) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          if (!sys.fourth_invariant_entry(i, j, k, l).is_zero()) return false;
  return true;
}

inline bool douglas_identically_zero(const SystemSpec& sys) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          if (!sys.douglas_entry(i, j, k, l).is_zero()) return false;
  return true;
}

/// Every geometric object of the lifted system evaluated at one point.
struct KccData {
  Mat2 jacobian;
  Vec2 spray;
  Mat2 connection;
  Tensor2x2x2 berwald;
  Vec2 first_invariant;
  Mat2 deviation_curvature;
  Tensor2x2x2 third_invariant;
  Tensor2x2x2x2 fourth_invariant;
  Tensor2x2x2x2 douglas;
  bool autonomous = true;  // dN/dt term identically zero in scope
};

inline KccData kcc_at(const SystemSpec& sys, const TangentPoint& p) {
  KccData data;
  data.jacobian = sys.jacobian_at(p.x1, p.x2);
  data.spray = spray_at(sys, p);
  data.connection = connection_at(sys, p);
  data.berwald = berwald_at(sys, p);
  data.first_invariant = first_invariant_at(sys, p);
  data.deviation_curvature = deviation_curvature(sys, p);
  data.third_invariant = third_invariant_at(sys, p);
  data.fourth_invariant = fourth_invariant_at(sys, p);
  data.douglas = douglas_at(sys, p);
  return data;
}

}  // namespace kcclab
