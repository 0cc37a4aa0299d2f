// Executes a loaded AnalysisConfig: runs the requested computations, writes
// trace/scan CSV files and assembles the JSON report.
//
// Reports are deterministic: identical configs produce byte-identical
// reports except for the "meta" object, which carries the timestamp and is
// the only part excluded from golden comparisons. Scan evaluation may run on
// several threads (capped by KCC_LAB_THREADS); results are written by a
// single writer in row-major order, so the thread count never changes the
// output bytes.

#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kcclab/config.hpp"
#include "kcclab/dynamics.hpp"
#include "kcclab/hamiltonian.hpp"
#include "kcclab/kcc.hpp"
#include "kcclab/stability.hpp"

namespace kcclab {

inline constexpr const char* kToolName = "kcc-lab";
inline constexpr const char* kToolVersion = "0.1.0";

inline unsigned worker_threads() {
  if (const char* env = std::getenv("KCC_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

namespace detail {

using json = nlohmann::json;

inline json to_json(Vec2 v) { return json::array({v.v1, v.v2}); }

inline json to_json(const Mat2& m) {
  return json::array({json::array({m.a11, m.a12}), json::array({m.a21, m.a22})});
}

inline json to_json(std::complex<double> z) {
  return json{{"re", z.real()}, {"im", z.imag()}};
}

inline json to_json(const Tensor2x2x2& t) {
  json out = json::array();
  for (const auto& plane : t) {
    json p = json::array();
    for (const auto& row : plane) p.push_back(json::array({row[0], row[1]}));
    out.push_back(p);
  }
  return out;
}

inline json to_json(const Diagnostic& d) {
  return json{{"kind", to_string(d.kind)},
              {"where", to_json(d.where)},
              {"message", d.message}};
}

inline json to_json(const FixedPointReport& r) {
  return json{{"location", to_json(r.location)},
              {"jacobian", to_json(r.jacobian)},
              {"tr_a", r.tr_a},
              {"det_a", r.det_a},
              {"delta", r.delta},
              {"lyapunov_class", to_string(r.lyapunov)},
              {"lyapunov_borderline", r.lyapunov_borderline},
              {"deviation_curvature", to_json(r.deviation)},
              {"tr_p", r.tr_p},
              {"det_p", r.det_p},
              {"delta_tilde", r.delta_tilde},
              {"mu", json::array({to_json(r.mu1), to_json(r.mu2)})},
              {"jacobi_class", to_string(r.jacobi)},
              {"theorem41_consistent", r.theorem41_consistent}};
}

/// Output paths are relative to the working directory; parent directories
/// are created on demand.
inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  return std::ofstream(p);
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline double axis_value(const ScanAxis& a, long i) {
  return a.count == 1 ? a.min : a.min + (a.max - a.min) * double(i) / double(a.count - 1);
}

/// Row-major scan of the deviation curvature over the configured grid.
/// Returns the number of points written.
inline long run_scan(const SystemSpec& sys, const AnalysisConfig& cfg,
                     std::ostream& os) {
  const auto& ax = cfg.scan_axes;
  const long n1 = ax[0].count, n2 = ax[1].count, n3 = ax[2].count, n4 = ax[3].count;
  const long total = n1 * n2 * n3 * n4;

  struct Row {
    double x1, x2, y1, y2, max_re, tr_p, det_p;
  };
  std::vector<Row> rows(static_cast<std::size_t>(total));

  auto evaluate_range = [&](long begin, long end) {
    for (long idx = begin; idx < end; ++idx) {
      long rest = idx;
      const long i4 = rest % n4; rest /= n4;
      const long i3 = rest % n3; rest /= n3;
      const long i2 = rest % n2; rest /= n2;
      const long i1 = rest;
      const TangentPoint p{axis_value(ax[0], i1), axis_value(ax[1], i2),
                           axis_value(ax[2], i3), axis_value(ax[3], i4)};
      const Mat2 dev = deviation_curvature(sys, p);
      rows[static_cast<std::size_t>(idx)] =
          {p.x1, p.x2, p.y1, p.y2, max_real_eigenvalue(dev), dev.trace(), dev.det()};
    }
  };

  const long want = std::min<long>(worker_threads(), total);
  if (want <= 1) {
    evaluate_range(0, total);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (total + want - 1) / want;
    for (long t = 0; t < want; ++t) {
      const long begin = t * chunk;
      const long end = std::min(total, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(evaluate_range, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  os << "x1,x2,y1,y2,maxRe_eigP,trP,detP\n";
  for (const Row& r : rows) {
    put_csv_value(os, r.x1, ',');
    put_csv_value(os, r.x2, ',');
    put_csv_value(os, r.y1, ',');
    put_csv_value(os, r.y2, ',');
    put_csv_value(os, r.max_re, ',');
    put_csv_value(os, r.tr_p, ',');
    put_csv_value(os, r.det_p, '\n');
  }
  return total;
}

}  // namespace detail

struct RunOutcome {
  int exit_code = 0;
  nlohmann::json report;
};

/// Runs every requested output of a loaded config and assembles the report.
/// CSV side outputs (deviation trace, scan field) are written here; the
/// report file itself is written by run_command.
inline RunOutcome run_analysis(const AnalysisConfig& cfg) {
  using detail::json;
  json report;
  std::vector<Diagnostic> diagnostics;

  const SystemSpec sys = cfg.build_system();

  json input;
  input["mode"] = cfg.mode == AnalysisConfig::Mode::System ? "system" : "hamiltonian";
  if (cfg.mode == AnalysisConfig::Mode::System) {
    input["f"] = cfg.f_text;
    input["g"] = cfg.g_text;
  } else {
    input["hamiltonian"] = cfg.h_text;
    if (cfg.has_point_particle) {
      input["potential"] = cfg.v_text;
      input["mass"] = cfg.mass;
    }
  }
  input["parameters"] = json(cfg.params);
  input["assumptions"] = json::array({"autonomous"});
  // Poles introduced by differentiation (quotients, ln, sqrt) surface here.
  input["derivative_domain_risk"] =
      sys.jacobian_entry(0, 0).has_domain_risk() || sys.jacobian_entry(0, 1).has_domain_risk() ||
      sys.jacobian_entry(1, 0).has_domain_risk() || sys.jacobian_entry(1, 1).has_domain_risk();
  report["input"] = input;

  std::vector<Vec2> fixed_points;
  const bool needs_fixed_points =
      cfg.requested(OutputKind::Classify) || cfg.requested(OutputKind::Certificate);
  if (needs_fixed_points) {
    ClassificationResult cls = classify_all(sys, cfg.seeds);
    for (const Diagnostic& d : cls.diagnostics) diagnostics.push_back(d);
    for (const FixedPointReport& r : cls.reports) fixed_points.push_back(r.location);
    if (cfg.requested(OutputKind::Classify)) {
      json arr = json::array();
      for (const FixedPointReport& r : cls.reports) arr.push_back(detail::to_json(r));
      report["fixed_points"] = arr;
    }
  }

  if (cfg.requested(OutputKind::Invariants)) {
    const KccData data = kcc_at(sys, cfg.invariants_point);
    const Eigenpair mu = eigenvalues(data.deviation_curvature);
    json inv;
    inv["point"] = json::array({cfg.invariants_point.x1, cfg.invariants_point.x2,
                                cfg.invariants_point.y1, cfg.invariants_point.y2});
    inv["jacobian"] = detail::to_json(data.jacobian);
    inv["spray"] = detail::to_json(data.spray);
    inv["connection"] = detail::to_json(data.connection);
    inv["first_invariant"] = detail::to_json(data.first_invariant);
    inv["deviation_curvature"] = detail::to_json(data.deviation_curvature);
    inv["deviation_eigenvalues"] =
        json::array({detail::to_json(mu[0]), detail::to_json(mu[1])});
    inv["trace_p"] = data.deviation_curvature.trace();
    inv["third_invariant"] = detail::to_json(data.third_invariant);
    inv["berwald_zero"] = berwald_identically_zero(sys);
    inv["fourth_invariant_zero"] = fourth_invariant_identically_zero(sys);
    inv["douglas_zero"] = douglas_identically_zero(sys);
    inv["autonomous"] = data.autonomous;
    report["invariants"] = inv;
  }

  if (cfg.requested(OutputKind::Certificate)) {
    const HamiltonianSpec ham = cfg.build_hamiltonian();
    std::vector<double> xs;
    for (const Vec2 p : fixed_points) xs.push_back(p.v1);
    if (cfg.has_certificate_grid)
      for (long i = 0; i < cfg.certificate_grid.count; ++i)
        xs.push_back(detail::axis_value(cfg.certificate_grid, i));
    const JacobiCertificate cert = jacobi_certificate(ham, xs);
    json jc;
    jc["mass"] = cfg.mass;
    jc["stable_everywhere_sampled"] = cert.stable_everywhere_sampled;
    json pts = json::array();
    for (const CertificatePoint& cp : cert.points)
      pts.push_back(json{{"x", cp.x},
                         {"v_second", cp.potential_second},
                         {"lambda", cp.lambda},
                         {"verdict", to_string(cp.verdict)}});
    jc["points"] = pts;
    report["certificate"] = jc;
  }

  if (cfg.requested(OutputKind::Deviate)) {
    const DeviationTrace trace =
        integrate_deviation(sys, cfg.deviate_x0, cfg.deviate_w, cfg.integrator);
    {
      std::ofstream os = detail::open_output(cfg.trace_path);
      if (!os) throw ConfigError(0, "cannot write trace file '" + cfg.trace_path + "'");
      write_deviation_csv(os, trace);
    }
    json dev;
    dev["x0"] = detail::to_json(cfg.deviate_x0);
    dev["w"] = detail::to_json(cfg.deviate_w);
    dev["trace_file"] = cfg.trace_path;
    dev["samples"] = trace.times.size();
    dev["max_re_eig_p0"] = trace.max_re_eig_p0;
    dev["truncated_at"] = trace.truncated_at ? json(*trace.truncated_at) : json(nullptr);
    if (cfg.has_window) {
      try {
        const FocusingReport foc = focusing_report(trace, cfg.window_min, cfg.window_max);
        dev["focusing"] = json{{"t_min", foc.t_min},
                               {"t_max", foc.t_max},
                               {"max_xi_norm", foc.max_xi_norm},
                               {"ratio_begin", foc.ratio_begin},
                               {"ratio_end", foc.ratio_end},
                               {"ratio_increasing", foc.ratio_increasing},
                               {"annotation", foc.annotation}};
      } catch (const EmptyWindow& e) {
        diagnostics.push_back({Diagnostic::Kind::EvalFailure, cfg.deviate_x0, e.what()});
      }
    }
    report["deviation"] = dev;
  }

  if (cfg.requested(OutputKind::Scan)) {
    std::ofstream os = detail::open_output(cfg.scan_path);
    if (!os) throw ConfigError(0, "cannot write scan file '" + cfg.scan_path + "'");
    const long points = detail::run_scan(sys, cfg, os);
    report["scan"] = json{{"file", cfg.scan_path}, {"points", points}};
  }

  json diag = json::array();
  for (const Diagnostic& d : diagnostics) diag.push_back(detail::to_json(d));
  report["diagnostics"] = diag;

  report["meta"] = json{{"tool", kToolName},
                        {"version", kToolVersion},
                        {"generated_at", detail::utc_timestamp()}};

  RunOutcome out;
  out.exit_code = diagnostics.empty() ? 0 : 1;
  out.report = std::move(report);
  return out;
}

/// `kcc-lab run <config>`: full run, report written to the configured path.
inline int run_command(const std::filesystem::path& config_path, std::ostream& log = std::cout) {
  try {
    const AnalysisConfig cfg = AnalysisConfig::load(config_path);
    const RunOutcome outcome = run_analysis(cfg);
    std::ofstream os = detail::open_output(cfg.report_path);
    if (!os) {
      std::cerr << "error: cannot write report '" << cfg.report_path << "'\n";
      return 2;
    }
    os << outcome.report.dump(2) << '\n';
    log << "report written to " << cfg.report_path << '\n';
    if (outcome.exit_code != 0)
      log << outcome.report["diagnostics"].size() << " diagnostic(s); see report\n";
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

/// `kcc-lab scan <config>`: runs only the scan output of the config.
inline int scan_command(const std::filesystem::path& config_path, std::ostream& log = std::cout) {
  try {
    AnalysisConfig cfg = AnalysisConfig::load(config_path);
    if (!cfg.requested(OutputKind::Scan)) {
      std::cerr << "error: config does not request a scan output\n";
      return 2;
    }
    const SystemSpec sys = cfg.build_system();
    std::ofstream os = detail::open_output(cfg.scan_path);
    if (!os) {
      std::cerr << "error: cannot write scan file '" << cfg.scan_path << "'\n";
      return 2;
    }
    const long points = detail::run_scan(sys, cfg, os);
    log << points << " points written to " << cfg.scan_path << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

/// `kcc-lab validate <config>`: parse-only check.
inline int validate_command(const std::filesystem::path& config_path,
                            std::ostream& log = std::cout) {
  try {
    (void)AnalysisConfig::load(config_path);
    log << "ok: " << config_path.string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace kcclab
