// Fixed-step classical RK4 integration of the planar flow, of its
// second-order lift, and of the deviation (Jacobi) equations coupled to the
// lift, plus the focusing/dispersing diagnostics near t = 0.
//
// The step is fixed on purpose: traces are reproducible bit for bit, which
// the golden-report tests rely on. The deviation system is integrated as one
// coupled 8-dimensional state so the connection coefficients are evaluated on
// the exact evolving base state, never interpolated.

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcclab/kcc.hpp"
#include "kcclab/linalg.hpp"

namespace kcclab {

struct IntegratorConfig {
  double step = 1e-3;
  double t_end = 10.0;
  int record_stride = 1;  // record every n-th step
};

class EmptyWindow : public std::runtime_error {
public:
  explicit EmptyWindow(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

template <std::size_t N, typename Rhs>
std::array<double, N> rk4_step(const Rhs& rhs, const std::array<double, N>& x,
                               double h) {
  std::array<double, N> k1 = rhs(x);
  std::array<double, N> tmp;
  for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  std::array<double, N> k2 = rhs(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  std::array<double, N> k3 = rhs(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + h * k3[i];
  std::array<double, N> k4 = rhs(tmp);
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <std::size_t N>
bool all_finite(const std::array<double, N>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Whole steps of size `step` plus one shorter remainder step when t_end is
/// not a multiple, so traces always end exactly at t_end.
struct StepPlan {
  long full_steps = 0;
  double remainder = 0.0;
};

inline StepPlan step_plan(const IntegratorConfig& cfg) {
  if (!(cfg.step > 0.0) || !(cfg.t_end > 0.0))
    throw std::invalid_argument("integrator needs positive step and t_end");
  if (cfg.record_stride < 1)
    throw std::invalid_argument("record_stride must be positive");
  long full = std::lround(cfg.t_end / cfg.step);
  double remainder = cfg.t_end - double(full) * cfg.step;
  if (std::abs(remainder) <= cfg.step * 1e-9) return {full, 0.0};
  if (remainder < 0.0) --full;
  return {full, cfg.t_end - double(full) * cfg.step};
}

/// Runs the step plan, invoking record(t, state) at t = 0, at every
/// record_stride-th step and at t_end. Returns the truncation time if the
/// state left the finite range, in which case recording stops.
template <std::size_t N, typename Rhs, typename Record>
std::optional<double> integrate_fixed(const Rhs& rhs, std::array<double, N> state,
                                      const IntegratorConfig& cfg,
                                      const Record& record) {
  const StepPlan plan = step_plan(cfg);
  record(0.0, state);
  for (long n = 1; n <= plan.full_steps; ++n) {
    state = rk4_step(rhs, state, cfg.step);
    if (!all_finite(state)) return double(n) * cfg.step;
    const bool last = n == plan.full_steps && plan.remainder == 0.0;
    if (n % cfg.record_stride == 0 || last)
      record(last ? cfg.t_end : double(n) * cfg.step, state);
  }
  if (plan.remainder > 0.0) {
    state = rk4_step(rhs, state, plan.remainder);
    if (!all_finite(state)) return cfg.t_end;
    record(cfg.t_end, state);
  }
  return std::nullopt;
}

}  // namespace detail

/// Sampled flow of the first-order system; state rows are (x1, x2, y1, y2)
/// with y the instantaneous right-hand side.
struct TrajectoryTrace {
  std::vector<double> times;
  std::vector<std::array<double, 4>> states;
  std::optional<double> truncated_at;  // set when the state left the finite range
};

inline TrajectoryTrace integrate_trajectory(const SystemSpec& sys, Vec2 x0,
                                            const IntegratorConfig& cfg) {
  auto rhs = [&](const std::array<double, 2>& s) -> std::array<double, 2> {
    const Vec2 v = sys.rhs({s[0], s[1]});
    return {v.v1, v.v2};
  };
  TrajectoryTrace trace;
  trace.truncated_at = detail::integrate_fixed<2>(
      rhs, {x0.v1, x0.v2}, cfg, [&](double t, const std::array<double, 2>& s) {
        const Vec2 v = sys.rhs({s[0], s[1]});
        trace.times.push_back(t);
        trace.states.push_back({s[0], s[1], v.v1, v.v2});
      });
  return trace;
}

/// Deviation trace: rows are (x1, x2, y1, y2, xi1, xi2, dxi1, dxi2).
struct DeviationTrace {
  std::vector<double> times;
  std::vector<std::array<double, 8>> states;
  double max_re_eig_p0 = 0.0;  // max Re eigenvalue of P at the initial point
  std::optional<double> truncated_at;

  double xi_norm(std::size_t i) const {
    return std::hypot(states[i][4], states[i][5]);
  }
  /// ||xi(t)|| / t^2; defined as 0 at t = 0.
  double ratio(std::size_t i) const {
    const double t = times[i];
    return t > 0.0 ? xi_norm(i) / (t * t) : 0.0;
  }
};

/// Integrates the deviation equations xi'' + 2 N xi' + 2 (dG/dx) xi = 0
/// coupled with the lifted base trajectory, from xi(0) = 0, xi'(0) = w != 0.
inline DeviationTrace integrate_deviation(const SystemSpec& sys, Vec2 x0, Vec2 w,
                                          const IntegratorConfig& cfg) {
  if (w.v1 == 0.0 && w.v2 == 0.0)
    throw std::invalid_argument("deviation initial velocity w must be nonzero");

  auto rhs = [&](const std::array<double, 8>& s) -> std::array<double, 8> {
    const TangentPoint p{s[0], s[1], s[2], s[3]};
    const Vec2 spray = spray_at(sys, p);
    const Mat2 conn = connection_at(sys, p);
    const Mat2 dgdx{sys.eval(sys.spray_x_derivative(0, 0), p),
                    sys.eval(sys.spray_x_derivative(0, 1), p),
                    sys.eval(sys.spray_x_derivative(1, 0), p),
                    sys.eval(sys.spray_x_derivative(1, 1), p)};
    const Vec2 xi{s[4], s[5]};
    const Vec2 dxi{s[6], s[7]};
    const Vec2 ddxi = (-2.0) * (conn * dxi) + (-2.0) * (dgdx * xi);
    return {s[2],          s[3],          -2.0 * spray.v1, -2.0 * spray.v2,
            dxi.v1,        dxi.v2,        ddxi.v1,         ddxi.v2};
  };

  const Vec2 y0 = sys.rhs(x0);
  DeviationTrace trace;
  trace.max_re_eig_p0 =
      max_real_eigenvalue(deviation_curvature(sys, {x0.v1, x0.v2, y0.v1, y0.v2}));
  trace.truncated_at = detail::integrate_fixed<8>(
      rhs, {x0.v1, x0.v2, y0.v1, y0.v2, 0.0, 0.0, w.v1, w.v2}, cfg,
      [&](double t, const std::array<double, 8>& s) {
        trace.times.push_back(t);
        trace.states.push_back(s);
      });
  return trace;
}

/// Integrates a genuinely perturbed lift trajectory (initial velocity shifted
/// by eta*w) and reports max_t || (x~(t) - x(t)) / eta - xi(t) || over the
/// position components. First order in eta for smooth systems; exactly
/// roundoff for linear flows.
inline double variational_crosscheck(const SystemSpec& sys, Vec2 x0, Vec2 w,
                                     double eta, const IntegratorConfig& cfg) {
  if (!(eta > 0.0) || eta > 1e-3)
    throw std::invalid_argument("eta must satisfy 0 < eta <= 1e-3");

  auto lift_rhs = [&](const std::array<double, 4>& s) -> std::array<double, 4> {
    const TangentPoint p{s[0], s[1], s[2], s[3]};
    const Vec2 spray = spray_at(sys, p);
    return {s[2], s[3], -2.0 * spray.v1, -2.0 * spray.v2};
  };

  const Vec2 y0 = sys.rhs(x0);
  std::vector<std::array<double, 2>> base, perturbed;
  auto collect = [](std::vector<std::array<double, 2>>& out) {
    return [&out](double, const std::array<double, 4>& s) {
      out.push_back({s[0], s[1]});
    };
  };
  const auto trunc_base = detail::integrate_fixed<4>(
      lift_rhs, {x0.v1, x0.v2, y0.v1, y0.v2}, cfg, collect(base));
  const auto trunc_pert = detail::integrate_fixed<4>(
      lift_rhs, {x0.v1, x0.v2, y0.v1 + eta * w.v1, y0.v2 + eta * w.v2}, cfg,
      collect(perturbed));
  const DeviationTrace dev = integrate_deviation(sys, x0, w, cfg);
  if (trunc_base || trunc_pert || dev.truncated_at)
    throw std::runtime_error("trajectory left finite range during crosscheck");

  // All three integrations share the step plan, so samples align index-wise.
  double max_disc = 0.0;
  for (std::size_t i = 0; i < dev.states.size(); ++i) {
    const double d1 = (perturbed[i][0] - base[i][0]) / eta - dev.states[i][4];
    const double d2 = (perturbed[i][1] - base[i][1]) / eta - dev.states[i][5];
    max_disc = std::max(max_disc, std::hypot(d1, d2));
  }
  return max_disc;
}

/// Focusing diagnostics over a window (t_min, t_max], t_min > 0. The raw
/// ||xi||/t^2 figures and the eigenvalue verdict are reported side by side;
/// with xi(0) = 0 the norm grows linearly near 0, so the t^2 comparison is
/// informative only as a trend, and the annotation carries the operational
/// eigenvalue criterion.
struct FocusingReport {
  double t_min = 0.0;
  double t_max = 0.0;
  double max_xi_norm = 0.0;
  double ratio_begin = 0.0;
  double ratio_end = 0.0;
  bool ratio_increasing = false;
  double max_re_eig_p0 = 0.0;
  std::string annotation;
};

inline FocusingReport focusing_report(const DeviationTrace& trace, double t_min,
                                      double t_max) {
  if (!(t_min > 0.0) || !(t_max > t_min))
    throw EmptyWindow("window must satisfy 0 < t_min < t_max");
  FocusingReport rep;
  rep.t_min = t_min;
  rep.t_max = t_max;
  rep.max_re_eig_p0 = trace.max_re_eig_p0;
  bool any = false;
  double first_ratio = 0.0, last_ratio = 0.0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double t = trace.times[i];
    if (t < t_min || t > t_max) continue;
    const double r = trace.ratio(i);
    if (!any) first_ratio = r;
    last_ratio = r;
    rep.max_xi_norm = std::max(rep.max_xi_norm, trace.xi_norm(i));
    any = true;
  }
  if (!any) throw EmptyWindow("no recorded samples inside the window");
  rep.ratio_begin = first_ratio;
  rep.ratio_end = last_ratio;
  rep.ratio_increasing = last_ratio > first_ratio;
  if (rep.max_re_eig_p0 < -1e-10)
    rep.annotation = "bunching expected (max Re eig P < 0 at t = 0)";
  else if (rep.max_re_eig_p0 > 1e-10)
    rep.annotation = "dispersing expected (max Re eig P > 0 at t = 0)";
  else
    rep.annotation = "marginal (max Re eig P ~ 0 at t = 0)";
  return rep;
}

namespace detail {

/// %.17g with negative zero canonicalized, so zero cells are stable.
inline void put_csv_value(std::ostream& os, double v, char sep) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  os << buf << sep;
}

}  // namespace detail

/// CSV export, full double precision, one row per recorded sample.
inline void write_deviation_csv(std::ostream& os, const DeviationTrace& trace) {
  os << "t,x1,x2,y1,y2,xi1,xi2,dxi1,dxi2,xinorm,ratio\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    detail::put_csv_value(os, trace.times[i], ',');
    for (double v : trace.states[i]) detail::put_csv_value(os, v, ',');
    detail::put_csv_value(os, trace.xi_norm(i), ',');
    detail::put_csv_value(os, trace.ratio(i), '\n');
  }
}

/// Max |H(x(t)) - H(x(0))| along a trajectory of a Hamiltonian-derived system.
inline double max_energy_drift(const SystemSpec& sys, const TrajectoryTrace& trace) {
  if (!sys.hamiltonian())
    throw std::invalid_argument("system has no Hamiltonian attached");
  const Expr& h = *sys.hamiltonian();
  const double h0 =
      h.eval(trace.states.front()[0], trace.states.front()[1], sys.params());
  double drift = 0.0;
  for (const auto& s : trace.states)
    drift = std::max(drift, std::abs(h.eval(s[0], s[1], sys.params()) - h0));
  return drift;
}

}  // namespace kcclab
