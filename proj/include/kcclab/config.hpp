// Declarative analysis configuration: a flat, sectioned key = value file with
// expression values in double quotes. Loading parses and validates everything
// up front (mode, expressions, parameter references, requested outputs) so a
// loaded config is guaranteed runnable.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kcclab/dynamics.hpp"
#include "kcclab/expr.hpp"
#include "kcclab/hamiltonian.hpp"
#include "kcclab/kcc.hpp"

namespace kcclab {

class ConfigError : public std::runtime_error {
public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error(line > 0
                               ? "config line " + std::to_string(line) + ": " + message
                               : "config: " + message),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

namespace detail {

struct IniEntry {
  std::string value;
  int line = 0;
};

class IniFile {
public:
  static IniFile parse_stream(std::istream& in) {
    IniFile ini;
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip_comment(raw);
      trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3)
          throw ConfigError(lineno, "malformed section header");
        section = line.substr(1, line.size() - 2);
        trim(section);
        ini.sections_[section];  // record even if empty
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(lineno, "expected 'key = value'");
      if (section.empty())
        throw ConfigError(lineno, "entry outside of any [section]");
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      trim(key);
      trim(value);
      if (key.empty()) throw ConfigError(lineno, "empty key");
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
      ini.sections_[section][key].push_back({value, lineno});
    }
    return ini;
  }

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }

  std::optional<IniEntry> get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end() || k->second.empty()) return std::nullopt;
    if (k->second.size() > 1)
      throw ConfigError(k->second[1].line, "key '" + key + "' given more than once");
    return k->second.front();
  }

  std::vector<IniEntry> get_all(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return {};
    auto k = s->second.find(key);
    if (k == s->second.end()) return {};
    return k->second;
  }

  const std::map<std::string, std::map<std::string, std::vector<IniEntry>>>& sections()
      const {
    return sections_;
  }

private:
  static void trim(std::string& s) {
    const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && issp(s[i])) ++i;
    s.erase(0, i);
  }

  static std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }

  std::map<std::string, std::map<std::string, std::vector<IniEntry>>> sections_;
};

inline double parse_number(const IniEntry& e, const std::string& what) {
  const char* begin = e.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw ConfigError(e.line, what + ": '" + e.value + "' is not a number");
  return v;
}

inline std::vector<double> parse_numbers(const IniEntry& e, std::size_t count,
                                         const std::string& what) {
  std::istringstream in(e.value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
      throw ConfigError(e.line, what + ": '" + tok + "' is not a number");
    out.push_back(v);
  }
  if (out.size() != count)
    throw ConfigError(e.line, what + ": expected " + std::to_string(count) +
                                  " numbers, got " + std::to_string(out.size()));
  return out;
}

}  // namespace detail

enum class OutputKind { Classify, Invariants, Deviate, Scan, Certificate };

inline const char* to_string(OutputKind k) {
  switch (k) {
    case OutputKind::Classify: return "classify";
    case OutputKind::Invariants: return "invariants";
    case OutputKind::Deviate: return "deviate";
    case OutputKind::Scan: return "scan";
    case OutputKind::Certificate: return "certificate";
  }
  return "?";
}

struct ScanAxis {
  double min = 0.0;
  double max = 0.0;
  long count = 1;
};

inline constexpr long kScanPointCap = 10'000'000;

struct AnalysisConfig {
  enum class Mode { System, Hamiltonian };

  Mode mode = Mode::System;

  std::string f_text, g_text, h_text, v_text;
  Expr f_expr, g_expr, h_expr, v_expr;
  ParamBindings params;

  bool has_point_particle = false;
  double mass = 1.0;
  std::string mass_parameter;  // set when the mass is spelled as a parameter

  std::vector<Vec2> seeds;
  IntegratorConfig integrator;

  std::vector<OutputKind> requests;
  std::string report_path = "report.json";
  std::string trace_path = "deviation.csv";
  std::string scan_path = "scan.csv";

  bool has_invariants_point = false;
  TangentPoint invariants_point;

  Vec2 deviate_x0{0.0, 0.0};
  Vec2 deviate_w{1.0, 0.0};
  bool has_window = false;
  double window_min = 0.0, window_max = 0.0;

  std::array<ScanAxis, 4> scan_axes{};  // x1, x2, y1, y2
  bool has_certificate_grid = false;
  ScanAxis certificate_grid;

  bool requested(OutputKind k) const {
    for (OutputKind r : requests)
      if (r == k) return true;
    return false;
  }

  SystemSpec build_system() const {
    if (mode == Mode::System) return SystemSpec(f_expr, g_expr, params);
    return to_system(build_hamiltonian());
  }

  HamiltonianSpec build_hamiltonian() const {
    std::optional<PointParticle> pp;
    if (has_point_particle) pp = PointParticle{mass, v_expr, mass_parameter};
    return HamiltonianSpec(h_expr, params, std::move(pp));
  }

  static AnalysisConfig load(const std::filesystem::path& path);
};

namespace detail {

inline void load_scan_axis(const IniFile& ini, const std::string& key, ScanAxis& axis,
                           bool& present) {
  auto entry = ini.get("scan", key);
  if (!entry) return;
  const std::vector<double> v = parse_numbers(*entry, 3, "scan axis " + key);
  axis.min = v[0];
  axis.max = v[1];
  axis.count = std::lround(v[2]);
  if (axis.count < 1 || (axis.count > 1 && !(axis.max > axis.min)))
    throw ConfigError(entry->line, "scan axis " + key + " needs count >= 1 and max > min");
  present = true;
}

}  // namespace detail

inline AnalysisConfig AnalysisConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open '" + path.string() + "'");
  const detail::IniFile ini = detail::IniFile::parse_stream(in);

  static const std::map<std::string, std::vector<std::string>> known = {
      {"system", {"f", "g"}},
      {"hamiltonian", {"h", "v", "m"}},
      {"params", {}},
      {"seeds", {"point", "grid"}},
      {"integrator", {"h", "t_end", "record_stride"}},
      {"outputs", {"requests", "report", "trace", "scan_out"}},
      {"invariants", {"point"}},
      {"deviate", {"x0", "w", "window"}},
      {"scan", {"x1", "x2", "y1", "y2", "out"}},
      {"certificate", {"grid"}},
  };
  for (const auto& [section, keys] : ini.sections()) {
    auto it = known.find(section);
    if (it == known.end()) throw ConfigError(0, "unknown section [" + section + "]");
    if (section == "params") continue;  // free-form keys
    for (const auto& [key, entries] : keys)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError(entries.front().line,
                          "unknown key '" + key + "' in [" + section + "]");
  }

  AnalysisConfig cfg;

  const bool sys_mode = ini.has_section("system");
  const bool ham_mode = ini.has_section("hamiltonian");
  if (sys_mode == ham_mode)
    throw ConfigError(0, "exactly one of [system] or [hamiltonian] is required");
  cfg.mode = sys_mode ? Mode::System : Mode::Hamiltonian;

  if (auto p = ini.sections().find("params"); p != ini.sections().end()) {
    for (const auto& [key, entries] : p->second) {
      if (entries.size() > 1)
        throw ConfigError(entries[1].line, "parameter '" + key + "' bound twice");
      cfg.params[key] = detail::parse_number(entries.front(), "parameter " + key);
    }
  }

  ParseOptions popts;
  for (const auto& [name, value] : cfg.params) popts.parameters.insert(name);
  popts.hamiltonian_aliases = cfg.mode == Mode::Hamiltonian;

  auto parse_expr = [&](const detail::IniEntry& e, const std::string& what) -> Expr {
    try {
      return parse(e.value, popts);
    } catch (const SyntaxError& err) {
      throw ConfigError(e.line, what + ": " + err.what());
    } catch (const UnknownIdentifier& err) {
      throw ConfigError(e.line, what + ": " + err.what() +
                                    " (parameters must be declared in [params])");
    }
  };

  if (cfg.mode == Mode::System) {
    auto f = ini.get("system", "f");
    auto g = ini.get("system", "g");
    if (!f) throw ConfigError(0, "[system] requires f");
    if (!g) throw ConfigError(0, "[system] requires g");
    cfg.f_text = f->value;
    cfg.g_text = g->value;
    cfg.f_expr = parse_expr(*f, "f");
    cfg.g_expr = parse_expr(*g, "g");
  } else {
    auto h = ini.get("hamiltonian", "h");
    if (!h) throw ConfigError(0, "[hamiltonian] requires h");
    cfg.h_text = h->value;
    cfg.h_expr = parse_expr(*h, "h");
    auto v = ini.get("hamiltonian", "v");
    auto m = ini.get("hamiltonian", "m");
    if (v) {
      if (!m)
        throw ConfigError(v->line, "point-particle mode needs m next to v");
      cfg.has_point_particle = true;
      cfg.v_text = v->value;
      cfg.v_expr = parse_expr(*v, "v");
      if (cfg.params.count(m->value)) {
        cfg.mass_parameter = m->value;
        cfg.mass = cfg.params.at(m->value);
      } else {
        cfg.mass = detail::parse_number(*m, "mass m");
      }
      if (!(cfg.mass > 0.0)) throw ConfigError(m->line, "mass m must be > 0");
    } else if (m) {
      throw ConfigError(m->line, "m without v: point-particle mode needs both");
    }
  }

  for (const auto& e : ini.get_all("seeds", "point")) {
    const std::vector<double> v = detail::parse_numbers(e, 2, "seed point");
    cfg.seeds.push_back({v[0], v[1]});
  }
  for (const auto& e : ini.get_all("seeds", "grid")) {
    const std::vector<double> v = detail::parse_numbers(e, 6, "seed grid");
    const long n1 = std::lround(v[2]), n2 = std::lround(v[5]);
    if (n1 < 1 || n2 < 1) throw ConfigError(e.line, "seed grid counts must be >= 1");
    for (long i = 0; i < n1; ++i)
      for (long j = 0; j < n2; ++j)
        cfg.seeds.push_back(
            {n1 == 1 ? v[0] : v[0] + (v[1] - v[0]) * double(i) / double(n1 - 1),
             n2 == 1 ? v[3] : v[3] + (v[4] - v[3]) * double(j) / double(n2 - 1)});
  }

  if (auto e = ini.get("integrator", "h")) {
    cfg.integrator.step = detail::parse_number(*e, "integrator h");
    if (!(cfg.integrator.step > 0.0)) throw ConfigError(e->line, "integrator h must be > 0");
  }
  if (auto e = ini.get("integrator", "t_end")) {
    cfg.integrator.t_end = detail::parse_number(*e, "integrator t_end");
    if (!(cfg.integrator.t_end > 0.0))
      throw ConfigError(e->line, "integrator t_end must be > 0");
  }
  if (auto e = ini.get("integrator", "record_stride")) {
    cfg.integrator.record_stride = static_cast<int>(detail::parse_number(*e, "record_stride"));
    if (cfg.integrator.record_stride < 1)
      throw ConfigError(e->line, "record_stride must be >= 1");
  }

  auto requests = ini.get("outputs", "requests");
  if (!requests || requests->value.empty())
    throw ConfigError(0, "[outputs] requests must name at least one output");
  {
    std::istringstream in_req(requests->value);
    std::string tok;
    while (in_req >> tok) {
      if (tok == "classify") cfg.requests.push_back(OutputKind::Classify);
      else if (tok == "invariants") cfg.requests.push_back(OutputKind::Invariants);
      else if (tok == "deviate") cfg.requests.push_back(OutputKind::Deviate);
      else if (tok == "scan") cfg.requests.push_back(OutputKind::Scan);
      else if (tok == "certificate") cfg.requests.push_back(OutputKind::Certificate);
      else throw ConfigError(requests->line, "unknown output '" + tok + "'");
    }
  }
  if (cfg.requests.empty())
    throw ConfigError(requests->line, "requests must name at least one output");

  if (auto e = ini.get("outputs", "report")) cfg.report_path = e->value;
  if (auto e = ini.get("outputs", "trace")) cfg.trace_path = e->value;
  if (auto e = ini.get("outputs", "scan_out")) cfg.scan_path = e->value;

  if (auto e = ini.get("invariants", "point")) {
    const std::vector<double> v = detail::parse_numbers(*e, 4, "invariants point");
    cfg.invariants_point = {v[0], v[1], v[2], v[3]};
    cfg.has_invariants_point = true;
  }
  if (cfg.requested(OutputKind::Invariants) && !cfg.has_invariants_point)
    throw ConfigError(0, "invariants output needs [invariants] point = x1 x2 y1 y2");

  if (auto e = ini.get("deviate", "x0")) {
    const std::vector<double> v = detail::parse_numbers(*e, 2, "deviate x0");
    cfg.deviate_x0 = {v[0], v[1]};
  }
  if (auto e = ini.get("deviate", "w")) {
    const std::vector<double> v = detail::parse_numbers(*e, 2, "deviate w");
    cfg.deviate_w = {v[0], v[1]};
    if (v[0] == 0.0 && v[1] == 0.0)
      throw ConfigError(e->line, "deviate w must be nonzero");
  }
  if (auto e = ini.get("deviate", "window")) {
    const std::vector<double> v = detail::parse_numbers(*e, 2, "deviate window");
    cfg.window_min = v[0];
    cfg.window_max = v[1];
    cfg.has_window = true;
  }

  if (cfg.requested(OutputKind::Scan)) {
    bool any = false;
    bool present[4] = {false, false, false, false};
    detail::load_scan_axis(ini, "x1", cfg.scan_axes[0], present[0]);
    detail::load_scan_axis(ini, "x2", cfg.scan_axes[1], present[1]);
    detail::load_scan_axis(ini, "y1", cfg.scan_axes[2], present[2]);
    detail::load_scan_axis(ini, "y2", cfg.scan_axes[3], present[3]);
    for (bool p : present) any = any || p;
    if (!any) throw ConfigError(0, "scan output needs a [scan] section with axes");
    long total = 1;
    for (const ScanAxis& a : cfg.scan_axes) total *= a.count;
    if (total > kScanPointCap)
      throw ConfigError(0, "scan grid exceeds the point cap (" +
                               std::to_string(kScanPointCap) + ")");
    if (auto e = ini.get("scan", "out")) cfg.scan_path = e->value;
  }

  if (auto e = ini.get("certificate", "grid")) {
    const std::vector<double> v = detail::parse_numbers(*e, 3, "certificate grid");
    cfg.certificate_grid = {v[0], v[1], std::lround(v[2])};
    if (cfg.certificate_grid.count < 1)
      throw ConfigError(e->line, "certificate grid count must be >= 1");
    cfg.has_certificate_grid = true;
  }

  if (cfg.requested(OutputKind::Certificate)) {
    if (cfg.mode != Mode::Hamiltonian || !cfg.has_point_particle)
      throw ConfigError(0, "certificate output needs a point-particle [hamiltonian]");
  }
  if ((cfg.requested(OutputKind::Classify) || cfg.requested(OutputKind::Certificate)) &&
      cfg.seeds.empty())
    throw ConfigError(0, "classify/certificate outputs need [seeds]");

  // Point-particle validation happens eagerly so a loaded config is runnable.
  if (cfg.mode == Mode::Hamiltonian) {
    try {
      (void)cfg.build_hamiltonian();
    } catch (const UnsupportedForm& err) {
      throw ConfigError(0, err.what());
    }
  }
  return cfg;
}

}  // namespace kcclab
