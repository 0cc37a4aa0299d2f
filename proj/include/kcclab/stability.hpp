// Fixed-point location and the two stability classifications: the standard
// linear (Lyapunov) taxonomy from the Jacobian eigenvalues, and Jacobi
// stability from the eigenvalues of the deviation curvature P = (A/2)^2 at
// the fixed point.
//
// All boundary comparisons use the band kClassificationBand; values inside
// the band are treated as zero and the outcome is flagged borderline or
// marginal rather than over-claimed.

#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "kcclab/kcc.hpp"
#include "kcclab/linalg.hpp"

namespace kcclab {

inline constexpr double kClassificationBand = 1e-10;

enum class LyapunovClass {
  StableNode,
  UnstableNode,
  Saddle,
  StableFocus,
  UnstableFocus,
  Center,
  DegenerateNode,
  StarNode,
  NonHyperbolicDegenerate,
};

enum class JacobiClass { Stable, Unstable, Marginal };

inline const char* to_string(LyapunovClass c) {
  switch (c) {
    case LyapunovClass::StableNode: return "stable-node";
    case LyapunovClass::UnstableNode: return "unstable-node";
    case LyapunovClass::Saddle: return "saddle";
    case LyapunovClass::StableFocus: return "stable-focus";
    case LyapunovClass::UnstableFocus: return "unstable-focus";
    case LyapunovClass::Center: return "center";
    case LyapunovClass::DegenerateNode: return "degenerate-node";
    case LyapunovClass::StarNode: return "star-node";
    case LyapunovClass::NonHyperbolicDegenerate: return "non-hyperbolic-degenerate";
  }
  return "?";
}

inline const char* to_string(JacobiClass c) {
  switch (c) {
    case JacobiClass::Stable: return "jacobi-stable";
    case JacobiClass::Unstable: return "jacobi-unstable";
    case JacobiClass::Marginal: return "marginal";
  }
  return "?";
}

struct LyapunovResult {
  LyapunovClass value;
  bool borderline;  // some decisive quantity fell inside the zero band
};

/// Full case tree on (tr A, det A, Delta). Total: every matrix receives
/// exactly one class.
inline LyapunovResult lyapunov_classify(const Mat2& a) {
  const double eps = kClassificationBand;
  const double tr = a.trace();
  const double det = a.det();
  const double delta = tr * tr - 4.0 * det;
  const bool borderline =
      std::abs(tr) <= eps || std::abs(det) <= eps || std::abs(delta) <= eps;

  if (std::abs(det) <= eps)
    return {LyapunovClass::NonHyperbolicDegenerate, true};

  if (delta > eps) {
    if (det < 0.0) return {LyapunovClass::Saddle, borderline};
    return {tr > 0.0 ? LyapunovClass::UnstableNode : LyapunovClass::StableNode,
            borderline};
  }

  if (delta < -eps) {
    if (std::abs(tr) <= eps) return {LyapunovClass::Center, borderline};
    return {tr < 0.0 ? LyapunovClass::StableFocus : LyapunovClass::UnstableFocus,
            borderline};
  }

  // Repeated eigenvalue lambda = tr/2 (det > 0 here, so lambda != 0).
  const double lambda = tr / 2.0;
  const bool diagonal = std::abs(a.a12) <= eps && std::abs(a.a21) <= eps &&
                        std::abs(a.a11 - lambda) <= eps &&
                        std::abs(a.a22 - lambda) <= eps;
  return {diagonal ? LyapunovClass::StarNode : LyapunovClass::DegenerateNode, true};
}

struct JacobiResult {
  JacobiClass value;
  std::complex<double> mu1;
  std::complex<double> mu2;
  /// Outcome of replaying Theorem 4.1 against the eigenvalue verdict:
  /// no stable verdict with Delta >= 0, and for Delta < 0 the verdict
  /// matches the sign of beta^2 - alpha^2 outside the marginal band.
  bool theorem41_consistent;
};

inline JacobiResult jacobi_classify(const Mat2& a) {
  const double eps = kClassificationBand;
  const Mat2 p0 = 0.25 * (a * a);
  const Eigenpair mu = eigenvalues(p0);
  const double max_re = std::max(mu[0].real(), mu[1].real());

  JacobiClass verdict = JacobiClass::Marginal;
  if (max_re < -eps)
    verdict = JacobiClass::Stable;
  else if (max_re > eps)
    verdict = JacobiClass::Unstable;

  const double tr = a.trace();
  const double delta = tr * tr - 4.0 * a.det();
  bool consistent = true;
  if (delta >= eps && verdict == JacobiClass::Stable) consistent = false;
  if (delta < -eps) {
    // lambda = alpha +- i beta, alpha^2 - beta^2 = (tr^2 + delta)/4 = 4 Re mu.
    const double s = (tr * tr + delta) / 4.0;
    if (std::abs(s) > 4.0 * eps) {
      const JacobiClass expected = s < 0.0 ? JacobiClass::Stable : JacobiClass::Unstable;
      if (verdict != expected) consistent = false;
    }
  }
  return {verdict, mu[0], mu[1], consistent};
}

struct NewtonOptions {
  double tolerance = 1e-12;     // on the sup norm of (f, g)
  int max_iterations = 100;
  int max_halvings = 20;
  double dedup_distance = 1e-8;
  double singular_jacobian = 1e-14;
};

struct Diagnostic {
  enum class Kind { NoConvergence, SingularJacobian, EvalFailure };
  Kind kind;
  Vec2 where;
  std::string message;
};

inline const char* to_string(Diagnostic::Kind k) {
  switch (k) {
    case Diagnostic::Kind::NoConvergence: return "no-convergence";
    case Diagnostic::Kind::SingularJacobian: return "singular-jacobian";
    case Diagnostic::Kind::EvalFailure: return "eval-failure";
  }
  return "?";
}

struct FixedPointSearch {
  std::vector<Vec2> points;
  std::vector<Diagnostic> diagnostics;
};

/// Damped Newton iteration on (f, g) from each seed. Converged roots are
/// deduplicated; per-seed failures become diagnostics, never exceptions.
inline FixedPointSearch find_fixed_points(const SystemSpec& sys,
                                          std::span<const Vec2> seeds,
                                          const NewtonOptions& opt = {}) {
  FixedPointSearch result;
  for (const Vec2 seed : seeds) {
    Vec2 x = seed;
    bool converged = false;
    bool reported = false;
    try {
      Vec2 fx = sys.rhs(x);
      for (int it = 0; it < opt.max_iterations && !converged; ++it) {
        if (fx.norm_inf() <= opt.tolerance) {
          converged = true;
          break;
        }
        const Mat2 jac = sys.jacobian_at(x.v1, x.v2);
        const double det = jac.det();
        if (std::abs(det) < opt.singular_jacobian) {
          result.diagnostics.push_back({Diagnostic::Kind::SingularJacobian, x,
                                        "Newton step undefined: |det J| < 1e-14"});
          reported = true;
          break;
        }
        const Vec2 step{(-fx.v1 * jac.a22 + fx.v2 * jac.a12) / det,
                        (-fx.v2 * jac.a11 + fx.v1 * jac.a21) / det};
        double alpha = 1.0;
        Vec2 next = x + alpha * step;
        Vec2 fnext = sys.rhs(next);
        for (int h = 0; h < opt.max_halvings && !(fnext.norm_inf() < fx.norm_inf()); ++h) {
          alpha /= 2.0;
          next = x + alpha * step;
          fnext = sys.rhs(next);
        }
        x = next;
        fx = fnext;
      }
      if (!converged && fx.norm_inf() <= opt.tolerance) converged = true;
      if (!converged) {
        if (!reported)
          result.diagnostics.push_back({Diagnostic::Kind::NoConvergence, seed,
                                        "Newton did not converge within iteration cap"});
        continue;
      }
    } catch (const EvalError& e) {
      result.diagnostics.push_back({Diagnostic::Kind::EvalFailure, x, e.what()});
      continue;
    }
    bool duplicate = false;
    for (const Vec2 known : result.points)
      if ((known - x).norm() <= opt.dedup_distance) {
        duplicate = true;
        break;
      }
    if (!duplicate) result.points.push_back(x);
  }
  return result;
}

/// Everything reported about one fixed point: the characteristic quantities
/// of A, both classifications and the deviation-curvature scalars.
struct FixedPointReport {
  Vec2 location;
  Mat2 jacobian;
  double tr_a = 0.0;
  double det_a = 0.0;
  double delta = 0.0;  // (tr A)^2 - 4 det A
  LyapunovClass lyapunov = LyapunovClass::NonHyperbolicDegenerate;
  bool lyapunov_borderline = false;
  Mat2 deviation;  // P|fp = (A/2)^2
  double tr_p = 0.0;
  double det_p = 0.0;
  double delta_tilde = 0.0;  // (tr P)^2 - 4 det P
  std::complex<double> mu1;
  std::complex<double> mu2;
  JacobiClass jacobi = JacobiClass::Marginal;
  bool theorem41_consistent = true;
};

inline FixedPointReport classify_fixed_point(const Mat2& a, Vec2 location) {
  FixedPointReport r;
  r.location = location;
  r.jacobian = a;
  r.tr_a = a.trace();
  r.det_a = a.det();
  r.delta = r.tr_a * r.tr_a - 4.0 * r.det_a;
  const LyapunovResult lyap = lyapunov_classify(a);
  r.lyapunov = lyap.value;
  r.lyapunov_borderline = lyap.borderline;
  r.deviation = 0.25 * (a * a);
  r.tr_p = r.deviation.trace();
  r.det_p = r.deviation.det();
  r.delta_tilde = r.tr_p * r.tr_p - 4.0 * r.det_p;
  const JacobiResult jac = jacobi_classify(a);
  r.jacobi = jac.value;
  r.mu1 = jac.mu1;
  r.mu2 = jac.mu2;
  r.theorem41_consistent = jac.theorem41_consistent;
  return r;
}

struct ClassificationResult {
  std::vector<FixedPointReport> reports;
  std::vector<Diagnostic> diagnostics;
};

inline ClassificationResult classify_all(const SystemSpec& sys,
                                         std::span<const Vec2> seeds,
                                         const NewtonOptions& opt = {}) {
  ClassificationResult out;
  FixedPointSearch search = find_fixed_points(sys, seeds, opt);
  out.diagnostics = std::move(search.diagnostics);
  for (const Vec2 x : search.points) {
    const Mat2 a = sys.jacobian_at(x.v1, x.v2);
    if (std::abs(a.det()) < opt.singular_jacobian)
      out.diagnostics.push_back({Diagnostic::Kind::SingularJacobian, x,
                                 "Jacobian singular at fixed point"});
    out.reports.push_back(classify_fixed_point(a, x));
  }
  return out;
}

}  // namespace kcclab
