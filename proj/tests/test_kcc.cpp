#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kcclab/kcc.hpp"
#include "support.hpp"

using namespace kcclab;
using testsupport::corpus_systems;
using testsupport::oracle_rk4_step;
using testsupport::random_tangent_point;
using testsupport::uniform;

namespace {

double mat_entry(const Mat2& m, int row, int col) {
  if (row == 0) return col == 0 ? m.a11 : m.a12;
  return col == 0 ? m.a21 : m.a22;
}

Mat2 spray_x_gradient_fd(const SystemSpec& sys, const TangentPoint& p, double h = 1e-6) {
  Mat2 out;
  for (int j = 0; j < 2; ++j) {
    TangentPoint plus = p, minus = p;
    (j == 0 ? plus.x1 : plus.x2) += h;
    (j == 0 ? minus.x1 : minus.x2) -= h;
    const Vec2 gp = spray_at(sys, plus);
    const Vec2 gm = spray_at(sys, minus);
    const double d1 = (gp.v1 - gm.v1) / (2.0 * h);
    const double d2 = (gp.v2 - gm.v2) / (2.0 * h);
    if (j == 0) {
      out.a11 = d1;
      out.a21 = d2;
    } else {
      out.a12 = d1;
      out.a22 = d2;
    }
  }
  return out;
}

/// dN/dt along the lifted flow by central difference over a short integrated arc.
Mat2 connection_time_derivative_fd(const SystemSpec& sys, const TangentPoint& p,
                                   double h = 1e-4) {
  auto rhs = [&](const std::array<double, 4>& s) -> std::array<double, 4> {
    const Vec2 g = spray_at(sys, {s[0], s[1], s[2], s[3]});
    return {s[2], s[3], -2.0 * g.v1, -2.0 * g.v2};
  };
  const std::array<double, 4> start{p.x1, p.x2, p.y1, p.y2};
  const auto fwd = oracle_rk4_step<4>(rhs, start, h);
  const auto bwd = oracle_rk4_step<4>(rhs, start, -h);
  const Mat2 np = connection_at(sys, {fwd[0], fwd[1], fwd[2], fwd[3]});
  const Mat2 nm = connection_at(sys, {bwd[0], bwd[1], bwd[2], bwd[3]});
  return (1.0 / (2.0 * h)) * (np - nm);
}

/// Independent assembly of P: finite differences for the dG/dx and dN/dt
/// pieces, the algebraic N^2 term evaluated directly.
Mat2 deviation_curvature_fd(const SystemSpec& sys, const TangentPoint& p) {
  const Mat2 dgdx = spray_x_gradient_fd(sys, p);
  const Mat2 ndot = connection_time_derivative_fd(sys, p);
  const Mat2 n = connection_at(sys, p);
  return (-2.0) * dgdx + ndot + n * n;
}

}  // namespace

TEST_CASE("lift of the harmonic oscillator has constant spray") {
  const SystemSpec sys(parse("x2"), parse("-x1"));
  const SecondOrderLift l = lift(sys);
  std::mt19937 rng(1);
  for (int i = 0; i < 20; ++i) {
    const TangentPoint p = random_tangent_point(rng, 2.0);
    CHECK(sys.eval(l.g1, p) == -0.5 * p.y2);
    CHECK(sys.eval(l.g2, p) == 0.5 * p.y1);
  }
}

TEST_CASE("lift of a diagonal parametric system") {
  const ParseOptions opts{{"a", "b"}, false};
  const SystemSpec sys(parse("a*x1", opts), parse("b*x2", opts),
                       ParamBindings{{"a", 2.5}, {"b", -0.75}});
  std::mt19937 rng(2);
  for (int i = 0; i < 20; ++i) {
    const TangentPoint p = random_tangent_point(rng, 2.0);
    const Vec2 g = spray_at(sys, p);
    CHECK(g.v1 == -0.5 * 2.5 * p.y1);
    CHECK(g.v2 == -0.5 * -0.75 * p.y2);
  }
}

TEST_CASE("pendulum lift matches the second time derivative along the flow") {
  const SystemSpec sys(parse("x2"), parse("-sin(x1)"));
  const SecondOrderLift l = lift(sys);

  // Symbolic form: G^2 = 1/2 cos(x1) y1.
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const TangentPoint p = random_tangent_point(rng, 2.0);
    CHECK(sys.eval(l.g2, p) ==
          Catch::Approx(0.5 * std::cos(p.x1) * p.y1).margin(1e-15));
  }

  // Oracle: d(g(x(t)))/dt by central difference along the first-order flow,
  // compared with -2 G^2 at the canonical lift point y = (f, g)(x).
  auto flow = [&](const std::array<double, 2>& s) -> std::array<double, 2> {
    const Vec2 v = sys.rhs({s[0], s[1]});
    return {v.v1, v.v2};
  };
  const double h = 1e-5;
  const std::array<double, 2> x{0.4, 0.3};
  const auto xp = oracle_rk4_step<2>(flow, x, h);
  const auto xm = oracle_rk4_step<2>(flow, x, -h);
  const double dg_dt =
      (sys.rhs({xp[0], xp[1]}).v2 - sys.rhs({xm[0], xm[1]}).v2) / (2.0 * h);
  const Vec2 y0 = sys.rhs({x[0], x[1]});
  const double lifted = -2.0 * sys.eval(l.g2, {x[0], x[1], y0.v1, y0.v2});
  CHECK(dg_dt == Catch::Approx(lifted).margin(1e-6));
}

TEST_CASE("connection equals minus half the Jacobian exactly") {
  std::mt19937 rng(4);
  for (const SystemSpec& sys : corpus_systems()) {
    for (int i = 0; i < 10; ++i) {
      const TangentPoint p = random_tangent_point(rng, 1.5);
      const Mat2 n = connection_at(sys, p);
      const Mat2 j = sys.jacobian_at(p.x1, p.x2);
      CHECK(n.a11 == -0.5 * j.a11);
      CHECK(n.a12 == -0.5 * j.a12);
      CHECK(n.a21 == -0.5 * j.a21);
      CHECK(n.a22 == -0.5 * j.a22);
    }
  }
}

TEST_CASE("pendulum connection at x1 = 0.3 and its y-derivative oracle") {
  const SystemSpec sys(parse("x2"), parse("-sin(x1)"));
  const TangentPoint p{0.3, 0.0, 0.7, -0.2};
  const Mat2 n = connection_at(sys, p);
  CHECK(n.a11 == 0.0);
  CHECK(n.a12 == -0.5);
  CHECK(n.a21 == Catch::Approx(0.5 * std::cos(0.3)).epsilon(1e-15));
  CHECK(n.a22 == 0.0);

  // Finite difference of G in y.
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    TangentPoint plus = p, minus = p;
    (j == 0 ? plus.y1 : plus.y2) += h;
    (j == 0 ? minus.y1 : minus.y2) -= h;
    const Vec2 gp = spray_at(sys, plus);
    const Vec2 gm = spray_at(sys, minus);
    const double n1j = (gp.v1 - gm.v1) / (2.0 * h);
    const double n2j = (gp.v2 - gm.v2) / (2.0 * h);
    CHECK(n1j == Catch::Approx(j == 0 ? n.a11 : n.a12).margin(1e-9));
    CHECK(n2j == Catch::Approx(j == 0 ? n.a21 : n.a22).margin(1e-9));
  }
}

TEST_CASE("first invariant vanishes at rest") {
  for (const SystemSpec& sys : corpus_systems()) {
    const Vec2 eps0 = first_invariant_at(sys, {0.37, -0.81, 0.0, 0.0});
    CHECK(eps0.v1 == 0.0);
    CHECK(eps0.v2 == 0.0);
  }

  const SystemSpec harmonic(parse("x2"), parse("-x1"));
  const Vec2 eps = first_invariant_at(harmonic, {0.0, 0.0, 1.0, 0.0});
  CHECK(eps.v1 == 0.0);
  CHECK(eps.v2 == 0.5);
}

TEST_CASE("first invariant two-path agreement on the pendulum") {
  const SystemSpec sys(parse("x2"), parse("-sin(x1)"));
  const TangentPoint p{0.3, 0.0, 1.0, 2.0};
  const Vec2 eps = first_invariant_at(sys, p);

  // Independent path: 2G - N y from the separately evaluated pieces.
  const Vec2 g = spray_at(sys, p);
  const Mat2 n = connection_at(sys, p);
  const Vec2 ny = n * Vec2{p.y1, p.y2};
  CHECK(eps.v1 == Catch::Approx(2.0 * g.v1 - ny.v1).margin(1e-15));
  CHECK(eps.v2 == Catch::Approx(2.0 * g.v2 - ny.v2).margin(1e-15));

  // And the closed linear-in-y form -1/2 J y.
  const Vec2 jy = sys.jacobian_at(p.x1, p.x2) * Vec2{p.y1, p.y2};
  CHECK(eps.v1 == Catch::Approx(-0.5 * jy.v1).margin(1e-15));
  CHECK(eps.v2 == Catch::Approx(-0.5 * jy.v2).margin(1e-15));
}

TEST_CASE("deviation curvature of the harmonic oscillator is -I/4 everywhere") {
  const SystemSpec sys(parse("x2"), parse("-x1"));
  std::mt19937 rng(5);
  for (int i = 0; i < 20; ++i) {
    const TangentPoint p = random_tangent_point(rng, 2.0);
    const Mat2 dev = deviation_curvature(sys, p);
    CHECK(dev.a11 == -0.25);
    CHECK(dev.a12 == 0.0);
    CHECK(dev.a21 == 0.0);
    CHECK(dev.a22 == -0.25);
    const Eigenpair mu = eigenvalues(dev);
    CHECK(mu[0].real() == -0.25);
    CHECK(mu[1].real() == -0.25);
  }
}

TEST_CASE("linear systems have constant deviation curvature A^2/4") {
  const SystemSpec sys(parse("x1 + 2*x2"), parse("3*x1 + 4*x2"));
  const Mat2 a{1.0, 2.0, 3.0, 4.0};
  const Mat2 expected = 0.25 * (a * a);
  std::mt19937 rng(6);
  for (int i = 0; i < 20; ++i) {
    const TangentPoint p = random_tangent_point(rng, 3.0);
    const Mat2 dev = deviation_curvature(sys, p);
    CHECK(dev.a11 == Catch::Approx(expected.a11).margin(1e-15));
    CHECK(dev.a12 == Catch::Approx(expected.a12).margin(1e-15));
    CHECK(dev.a21 == Catch::Approx(expected.a21).margin(1e-15));
    CHECK(dev.a22 == Catch::Approx(expected.a22).margin(1e-15));
  }
}

TEST_CASE("pendulum deviation curvature agrees across all three routes") {
  const SystemSpec sys(parse("x2"), parse("-sin(x1)"));
  const TangentPoint p{0.3, 0.0, 0.1, 0.2};
  const Mat2 direct = deviation_curvature(sys, p);
  const Mat2 hessian = deviation_curvature_hessian_form(sys, p);
  const Mat2 fd = deviation_curvature_fd(sys, p);

  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(mat_entry(direct, i, j) == Catch::Approx(mat_entry(hessian, i, j)).margin(1e-12));
      CHECK(mat_entry(direct, i, j) == Catch::Approx(mat_entry(fd, i, j)).margin(1e-6));
    }
}

TEST_CASE("direct and finite-difference deviation curvature agree on the corpus") {
  std::mt19937 rng(7);
  for (const SystemSpec& sys : corpus_systems()) {
    for (int i = 0; i < 5; ++i) {
      const TangentPoint p = random_tangent_point(rng, 0.8);
      const Mat2 direct = deviation_curvature(sys, p);
      const Mat2 fd = deviation_curvature_fd(sys, p);
      const Mat2 hess = deviation_curvature_hessian_form(sys, p);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          CHECK(std::abs(mat_entry(direct, r, c) - mat_entry(fd, r, c)) <= 1e-6);
          CHECK(std::abs(mat_entry(direct, r, c) - mat_entry(hess, r, c)) <= 1e-12);
        }
    }
  }
}

TEST_CASE("trace of P equals the eigenvalue sum") {
  std::mt19937 rng(8);
  for (const SystemSpec& sys : corpus_systems()) {
    const TangentPoint p = random_tangent_point(rng, 1.0);
    const Mat2 dev = deviation_curvature(sys, p);
    const Eigenpair mu = eigenvalues(dev);
    const double sum = mu[0].real() + mu[1].real();
    CHECK(std::abs(dev.trace() - sum) <=
          1e-12 * std::max(1.0, std::abs(dev.trace())));
  }
}

TEST_CASE("third invariant: symbolic path vs antisymmetrized finite difference") {
  const SystemSpec sys(parse("x1^2"), parse("x2^2"));
  std::mt19937 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const TangentPoint p = random_tangent_point(rng, 1.0);
    const Tensor2x2x2 sym = third_invariant_at(sys, p);
    const double h = 1e-6;
    auto p_entry = [&](const TangentPoint& q, int row, int col) {
      return mat_entry(deviation_curvature(sys, q), row, col);
    };
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          TangentPoint kp = p, km = p, jp = p, jm = p;
          (k == 0 ? kp.y1 : kp.y2) += h;
          (k == 0 ? km.y1 : km.y2) -= h;
          (j == 0 ? jp.y1 : jp.y2) += h;
          (j == 0 ? jm.y1 : jm.y2) -= h;
          const double dpij_dyk = (p_entry(kp, i, j) - p_entry(km, i, j)) / (2.0 * h);
          const double dpik_dyj = (p_entry(jp, i, k) - p_entry(jm, i, k)) / (2.0 * h);
          const double fd = (dpij_dyk - dpik_dyj) / 3.0;
          CHECK(std::abs(sym[i][j][k] - fd) <= 1e-6);
        }
  }
}

TEST_CASE("third invariant is y-independent in scope") {
  std::mt19937 rng(10);
  for (const SystemSpec& sys : corpus_systems()) {
    const double x1 = uniform(rng, -1.0, 1.0);
    const double x2 = uniform(rng, -1.0, 1.0);
    const Tensor2x2x2 a = third_invariant_at(sys, {x1, x2, 0.1, -0.4});
    const Tensor2x2x2 b = third_invariant_at(sys, {x1, x2, -2.0, 3.0});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) CHECK(a[i][j][k] == b[i][j][k]);
  }
}

TEST_CASE("structural zeros are symbolic, not merely small") {
  for (const SystemSpec& sys : corpus_systems()) {
    CHECK(berwald_identically_zero(sys));
    CHECK(fourth_invariant_identically_zero(sys));
    CHECK(douglas_identically_zero(sys));
  }
}

TEST_CASE("kcc_at bundles every object consistently") {
  const SystemSpec sys(parse("x2"), parse("-sin(x1)"));
  const TangentPoint p{0.5, -0.1, 0.2, 0.9};
  const KccData data = kcc_at(sys, p);
  CHECK(data.autonomous);
  CHECK(data.jacobian.a12 == 1.0);
  CHECK(data.connection.a12 == -0.5);
  const Mat2 dev = deviation_curvature(sys, p);
  CHECK(data.deviation_curvature.a21 == dev.a21);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) {
        CHECK(data.berwald[i][j][l] == 0.0);
        for (int k = 0; k < 2; ++k) {
          CHECK(data.fourth_invariant[i][j][l][k] == 0.0);
          CHECK(data.douglas[i][j][l][k] == 0.0);
        }
      }
}
