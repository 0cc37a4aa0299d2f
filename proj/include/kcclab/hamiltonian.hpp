// One-degree-of-freedom Hamiltonian systems: derivation of the planar system
// (f, g) = (dH/dx2, -dH/dx1), the specialized deviation curvature built from
// third derivatives of H, and the point-particle closed forms
// (H = x2^2/2m + V(x1)): the V'' stability certificate and the analytic
// solution of the deviation equations at an equilibrium.

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kcclab/expr.hpp"
#include "kcclab/kcc.hpp"
#include "kcclab/stability.hpp"

namespace kcclab {

class UnsupportedForm : public std::runtime_error {
public:
  explicit UnsupportedForm(const std::string& what) : std::runtime_error(what) {}
};

class NotAFixedPoint : public std::runtime_error {
public:
  NotAFixedPoint(double x0, double v_prime)
      : std::runtime_error("x0 = " + detail::format_double(x0) +
                           " is not an equilibrium: V'(x0) = " +
                           detail::format_double(v_prime)),
        x0_(x0) {}
  double x0() const noexcept { return x0_; }

private:
  double x0_;
};

/// Declares H to be of the point-particle form x2^2/(2 m) + V(x1).
/// `mass_parameter` names the bound parameter carrying m when the Hamiltonian
/// spells the mass symbolically; empty means the literal value is inlined.
struct PointParticle {
  double mass = 1.0;
  Expr potential;
  std::string mass_parameter;
};

class HamiltonianSpec {
public:
  explicit HamiltonianSpec(Expr h, ParamBindings params = {},
                           std::optional<PointParticle> point_particle = {})
      : h_(std::move(h)),
        params_(std::move(params)),
        point_particle_(std::move(point_particle)) {
    for (int i = 0; i < 2; ++i) {
      d1_[i] = h_.diff(i + 1);
      for (int j = 0; j < 2; ++j) {
        d2_[i][j] = d1_[i].diff(j + 1);
        for (int k = 0; k < 2; ++k) d3_[i][j][k] = d2_[i][j].diff(k + 1);
      }
    }
    f_ = d1_[1];
    g_ = -d1_[0];
    if (point_particle_) validate_point_particle();
  }

  const Expr& h() const { return h_; }
  const ParamBindings& params() const { return params_; }
  const std::optional<PointParticle>& point_particle() const { return point_particle_; }

  /// dH/dx^i, 0-based.
  const Expr& first_derivative(int i) const { return d1_[i]; }
  const Expr& second_derivative(int i, int j) const { return d2_[i][j]; }
  const Expr& third_derivative(int i, int j, int k) const { return d3_[i][j][k]; }

  const Expr& f() const { return f_; }
  const Expr& g() const { return g_; }

  double eval(const Expr& e, const TangentPoint& p) const {
    return e.eval(p.x1, p.x2, p.y1, p.y2, params_);
  }

private:
  void validate_point_particle() {
    const PointParticle& pp = *point_particle_;
    if (!(pp.mass > 0.0))
      throw UnsupportedForm("point-particle mass must be positive");
    if (pp.potential.depends_on(2) || pp.potential.depends_on(3) ||
        pp.potential.depends_on(4))
      throw UnsupportedForm("potential must depend on x1 only");
    const Expr mass_expr = pp.mass_parameter.empty()
                               ? Expr::constant(pp.mass)
                               : Expr::parameter(pp.mass_parameter);
    const Expr candidate =
        Expr::pow(Expr::variable(2), 2.0) / (Expr::constant(2.0) * mass_expr) +
        pp.potential;
    if (!structurally_equal(h_.simplified(), candidate.simplified()))
      throw UnsupportedForm(
          "hamiltonian is not structurally x2^2/(2 m) + V(x1); got '" + h_.str() + "'");
  }

  Expr h_;
  ParamBindings params_;
  std::optional<PointParticle> point_particle_;
  Expr d1_[2];
  Expr d2_[2][2];
  Expr d3_[2][2][2];
  Expr f_, g_;
};

/// The planar system of the Hamiltonian flow; carries H so downstream
/// consumers can run energy checks.
inline SystemSpec to_system(const HamiltonianSpec& ham) {
  return SystemSpec(ham.f(), ham.g(), ham.params(), ham.h());
}

/// dH/dt along the flow, H1 f + H2 g. Simplifies to the exact zero constant
/// for every Hamiltonian: H is a first integral.
inline Expr flow_derivative(const HamiltonianSpec& ham) {
  return ham.first_derivative(0) * ham.f() + ham.first_derivative(1) * ham.g();
}

/// Deviation curvature assembled from the Hamiltonian block form: row 0 of
/// the first term is 1/2 (Hess(H2) y)^T, row 1 is 1/2 (Hess(-H1) y)^T, plus
/// J_H^2/4 with J_H = [[H21, H22], [-H11, -H12]]. Agrees with the generic
/// path through to_system at every point.
inline Mat2 deviation_curvature_hamiltonian(const HamiltonianSpec& ham,
                                            const TangentPoint& p) {
  const double y[2] = {p.y1, p.y2};
  double first[2][2];
  for (int j = 0; j < 2; ++j) {
    double row0 = 0.0, row1 = 0.0;
    for (int k = 0; k < 2; ++k) {
      row0 += ham.eval(ham.third_derivative(1, j, k), p) * y[k];
      row1 -= ham.eval(ham.third_derivative(0, j, k), p) * y[k];
    }
    first[0][j] = 0.5 * row0;
    first[1][j] = 0.5 * row1;
  }
  const Mat2 jh{ham.eval(ham.second_derivative(1, 0), p),
                ham.eval(ham.second_derivative(1, 1), p),
                -ham.eval(ham.second_derivative(0, 0), p),
                -ham.eval(ham.second_derivative(0, 1), p)};
  const Mat2 jsq = jh * jh;
  return {first[0][0] + 0.25 * jsq.a11, first[0][1] + 0.25 * jsq.a12,
          first[1][0] + 0.25 * jsq.a21, first[1][1] + 0.25 * jsq.a22};
}

struct CertificatePoint {
  double x = 0.0;
  double potential_second = 0.0;  // V''(x)
  double lambda = 0.0;            // both eigenvalues of P_H: -V''(x) / 4m
  JacobiClass verdict = JacobiClass::Marginal;
};

struct JacobiCertificate {
  std::vector<CertificatePoint> points;
  bool stable_everywhere_sampled = false;
};

/// Point-particle Jacobi stability certificate: stable exactly where V'' > 0.
inline JacobiCertificate jacobi_certificate(const HamiltonianSpec& ham,
                                            std::span<const double> xs) {
  if (!ham.point_particle())
    throw UnsupportedForm("jacobi_certificate needs a point-particle Hamiltonian");
  const PointParticle& pp = *ham.point_particle();
  const Expr v_second = pp.potential.diff(1).diff(1);
  JacobiCertificate cert;
  cert.stable_everywhere_sampled = true;
  for (const double x : xs) {
    CertificatePoint cp;
    cp.x = x;
    cp.potential_second = v_second.eval(x, 0.0, ham.params());
    cp.lambda = -cp.potential_second / (4.0 * pp.mass);
    if (cp.potential_second > kClassificationBand)
      cp.verdict = JacobiClass::Stable;
    else if (cp.potential_second < -kClassificationBand)
      cp.verdict = JacobiClass::Unstable;
    else
      cp.verdict = JacobiClass::Marginal;
    if (cp.verdict != JacobiClass::Stable) cert.stable_everywhere_sampled = false;
    cert.points.push_back(cp);
  }
  return cert;
}

/// Closed-form solution of the deviation equations frozen at an equilibrium
/// (x0, 0) of the point-particle system, with xi(0) = 0 and xi'(0) given.
/// The V'' > 0 trigonometric form extends to V'' < 0 by sin -> sinh,
/// cos -> cosh with |V''| under the root, and to V'' = 0 by its series limit.
class DeviationSolution {
public:
  DeviationSolution(double x0, double mass, double potential_second, double xi10,
                    double xi20)
      : x0_(x0), m_(mass), vpp_(potential_second), xi10_(xi10), xi20_(xi20) {}

  double xi1(double t) const {
    if (vpp_ > 0.0) {
      const double omega = std::sqrt(vpp_ / m_);
      return std::sqrt(m_) * xi10_ / std::sqrt(vpp_) * std::sin(omega * t) +
             xi20_ / vpp_ * (1.0 - std::cos(omega * t));
    }
    if (vpp_ < 0.0) {
      const double c = -vpp_;
      const double omega = std::sqrt(c / m_);
      return std::sqrt(m_) * xi10_ / std::sqrt(c) * std::sinh(omega * t) +
             xi20_ / c * (std::cosh(omega * t) - 1.0);
    }
    return xi10_ * t + xi20_ * t * t / (2.0 * m_);
  }

  double xi2(double t) const {
    if (vpp_ > 0.0) {
      const double omega = std::sqrt(vpp_ / m_);
      return m_ * xi10_ * (std::cos(omega * t) - 1.0) +
             std::sqrt(m_) * xi20_ / std::sqrt(vpp_) * std::sin(omega * t);
    }
    if (vpp_ < 0.0) {
      const double c = -vpp_;
      const double omega = std::sqrt(c / m_);
      return m_ * xi10_ * (std::cosh(omega * t) - 1.0) +
             std::sqrt(m_) * xi20_ / std::sqrt(c) * std::sinh(omega * t);
    }
    return xi20_ * t;
  }

  double x0() const { return x0_; }
  double mass() const { return m_; }
  double potential_second() const { return vpp_; }
  double xi10() const { return xi10_; }
  double xi20() const { return xi20_; }

private:
  double x0_, m_, vpp_, xi10_, xi20_;
};

inline constexpr double kFixedPointTolerance = 1e-10;  // on |V'(x0)|

inline DeviationSolution analytic_deviation(const HamiltonianSpec& ham, double x0,
                                            double xi10, double xi20) {
  if (!ham.point_particle())
    throw UnsupportedForm("analytic_deviation needs a point-particle Hamiltonian");
  const PointParticle& pp = *ham.point_particle();
  const double v_prime = pp.potential.diff(1).eval(x0, 0.0, ham.params());
  if (std::abs(v_prime) > kFixedPointTolerance) throw NotAFixedPoint(x0, v_prime);
  const double v_second = pp.potential.diff(1).diff(1).eval(x0, 0.0, ham.params());
  return DeviationSolution(x0, pp.mass, v_second, xi10, xi20);
}

}  // namespace kcclab
