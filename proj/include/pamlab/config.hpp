#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pamlab/errors.hpp"
#include "pamlab/heat_semigroup.hpp"
#include "pamlab/lattice_solver.hpp"
#include "pamlab/spectral_kernels.hpp"

namespace pamlab {

inline constexpr const char* kVersion = "pamlab 1.0.0";
inline constexpr int kSchemaVersion = 1;

// Everything a subcommand may read. Fields not used by a subcommand are ignored by it.
struct RunConfig {
  int schema_version = kSchemaVersion;
  SimulationConfig sim;
  std::string coefficient = "pam";
  double lambda = 1.0;
  double saturation = 1.0;
  // second initial datum for the uniqueness experiment
  std::string mu2_id;
  RoughMeasure mu2;
  // simulate: csv, binary or both
  std::string snapshot_format = "csv";
  // lyapunov-sweep
  std::vector<double> lambdas{0.25, 0.5, 1, 2, 4, 8};
  double phase_T = 20.0;
  double phase_dt = 0.01;
  // kernel-report / semigroup-report
  std::vector<double> alpha_grid{0.25, 0.5, 0.75};
  std::vector<double> t_grid{1, 2, 4, 8, 16, 32};
  double t_max = 1e3;
  // gronwall-verify
  double beta = 0.4;
  double volterra_T = 40.0;
  double volterra_dt = 0.01;
  // bridge-verify
  std::size_t samples = 100000;
  int path_n = 64;
  std::vector<double> alphas{0.25, 0.5, 1.0};
  std::vector<double> conditioned_alphas{0.5, 0.25, 0.125};
  std::size_t conditioned_samples = 20000;
};

namespace detail {

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "version",  "dimension", "L",        "n",           "kernel",     "coefficient",        "lambda",
      "saturation", "mu",      "mu2",      "dt",          "T",          "snapshot_times",     "replicates",
      "seed",     "K_list",    "zero_mode", "deposit",    "lambdas",    "phase_T",            "phase_dt",
      "alpha_grid", "t_grid",  "t_max",    "beta",        "volterra_T", "volterra_dt",        "samples",
      "path_n",   "alphas",    "conditioned_alphas", "conditioned_samples", "snapshot_format"};
  return keys;
}

inline std::string suggest_key(const std::string& key) {
  std::string best;
  std::size_t bd = 3;
  for (const auto& k : config_keys()) {
    std::size_t d = levenshtein(key, k);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

[[noreturn]] inline void invalid(const std::string& field, const std::string& msg) {
  throw ConfigError(Errc::ValidationError, field, field + ": " + msg);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline double to_number(const std::string& field, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  invalid(field, "'" + s + "' is not a number");
}

// "name:key=value,key=value" or "name:value"; returns named parameters, a bare value under "".
struct IdParts {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;
  std::optional<double> get(const std::string& field, const std::string& key) const {
    for (const auto& [k, v] : params)
      if (k == key || (k.empty() && key == "")) return to_number(field, v);
    return std::nullopt;
  }
  double get_or(const std::string& field, const std::string& key, double def) const {
    if (auto v = get(field, key)) return *v;
    if (key != "")
      if (auto v = get(field, "")) return *v;
    return def;
  }
};

inline IdParts parse_id(const std::string& id) {
  IdParts p;
  auto colon = id.find(':');
  p.name = trim(id.substr(0, colon));
  if (colon == std::string::npos) return p;
  for (const auto& item : split(id.substr(colon + 1), ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) p.params.push_back({"", trim(item)});
    else p.params.push_back({trim(item.substr(0, eq)), trim(item.substr(eq + 1))});
  }
  return p;
}

}  // namespace detail

// Kernel identifiers: white, gaussian:a=1, bessel_corr:s=4, bessel_spec:s=1,
// riesz:s1=2,s2=2.5, bump:R=1.
inline SpectralMeasure parse_kernel(const std::string& id, const std::string& field = "kernel") {
  auto p = detail::parse_id(id);
  try {
    if (p.name == "white") return SpectralMeasure(White{});
    if (p.name == "gaussian") return SpectralMeasure(GaussianSpectral{p.get_or(field, "a", 1.0)});
    if (p.name == "bessel_corr") return SpectralMeasure(BesselAsCorrelation{p.get_or(field, "s", 4.0)});
    if (p.name == "bessel_spec") return SpectralMeasure(BesselAsSpectral{p.get_or(field, "s", 1.0)});
    if (p.name == "riesz") {
      auto s1 = p.get(field, "s1"), s2 = p.get(field, "s2");
      return SpectralMeasure(RieszType{s1 ? *s1 : 2.0, s2 ? *s2 : 2.5});
    }
    if (p.name == "bump") return SpectralMeasure(bump_mollifier(p.get_or(field, "R", 1.0)));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    detail::invalid(field, e.what());
  }
  detail::invalid(field, "unknown kernel '" + p.name + "'");
}

// Initial data: terms joined by '+' or '-', each "[c*]atom". Atoms:
// flat:c, dirac:x1;x2;x3[@w], power:alpha=a, comb[:truncation=k], growth:a=a.
inline RoughMeasure parse_measure(const std::string& id, int d, const std::string& field = "mu") {
  RoughMeasure mu;
  std::string s = id;
  std::size_t i = 0;
  double sign = 1.0;
  while (i < s.size() && s[i] == ' ') ++i;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) sign = s[i++] == '-' ? -1.0 : 1.0;
  while (i < s.size()) {
    std::size_t j = i;
    // a sign starts a new term unless it belongs to a number (after ':', '=', '@', exponent, ...)
    auto term_sign = [&](std::size_t k) {
      if (k == i || (s[k] != '+' && s[k] != '-')) return false;
      std::size_t q = k;
      while (q > i && s[q - 1] == ' ') --q;
      if (q == i) return false;
      char c = s[q - 1];
      if (std::string(":=,;@*").find(c) != std::string::npos) return false;
      if ((c == 'e' || c == 'E') && q - 1 > i && (std::isdigit(static_cast<unsigned char>(s[q - 2])) || s[q - 2] == '.'))
        return false;
      return true;
    };
    while (j < s.size() && !term_sign(j)) ++j;
    std::string term = detail::trim(s.substr(i, j - i));
    if (term.empty()) detail::invalid(field, "empty term in '" + id + "'");
    double coef = sign;
    auto star = term.find('*');
    if (star != std::string::npos) {
      coef *= detail::to_number(field, term.substr(0, star));
      term = detail::trim(term.substr(star + 1));
    }
    auto p = detail::parse_id(term);
    RoughMeasure part;
    if (p.name == "flat") {
      part = RoughMeasure::flat(p.get_or(field, "c", 1.0));
    } else if (p.name == "dirac") {
      Point x(d, 0.0);
      double w = 1.0;
      std::string spec = p.params.empty() ? "" : p.params.front().second;
      auto at = spec.find('@');
      if (at != std::string::npos) {
        w = detail::to_number(field, spec.substr(at + 1));
        spec = spec.substr(0, at);
      }
      if (!detail::trim(spec).empty()) {
        auto xs = detail::split(spec, ';');
        if (xs.size() == 1) {
          double v = detail::to_number(field, xs[0]);
          if (v != 0.0 && d > 1) detail::invalid(field, "dirac position needs " + std::to_string(d) + " coordinates");
          x[0] = v;
        } else if (static_cast<int>(xs.size()) == d) {
          for (int k = 0; k < d; ++k) x[k] = detail::to_number(field, xs[k]);
        } else {
          detail::invalid(field, "dirac position needs " + std::to_string(d) + " coordinates");
        }
      }
      part = RoughMeasure::dirac(x, w);
    } else if (p.name == "power") {
      part = RoughMeasure(PowerLawDensity{p.get_or(field, "alpha", 1.0)});
    } else if (p.name == "comb") {
      part = RoughMeasure(LatticeComb{static_cast<int>(p.get_or(field, "truncation", 10.0))});
    } else if (p.name == "growth") {
      part = RoughMeasure(GaussianGrowth{p.get_or(field, "a", 1.0)});
    } else {
      detail::invalid(field, "unknown initial datum '" + p.name + "'");
    }
    mu += coef * part;
    if (j < s.size()) sign = s[j] == '-' ? -1.0 : 1.0;
    i = j + 1;
  }
  if (mu.empty()) detail::invalid(field, "empty initial datum");
  return mu;
}

namespace detail {

// One "key = value" entry. Values are a bare scalar, a double-quoted string, or a [a, b, ...] list.
struct Entry {
  std::string key;
  std::vector<std::string> items;
  bool list = false;
  int line = 0;
  int column = 0;
};

[[noreturn]] inline void syntax(int line, int column, const std::string& msg) {
  throw ConfigError(Errc::ParseError, "",
                    "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg, line, column);
}

inline std::string unquote(const std::string& v, int line, int column) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  if (!v.empty() && v.front() == '"') syntax(line, column, "unterminated string");
  return v;
}

inline std::vector<Entry> read_entries(const std::string& text) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    // strip a comment that is not inside a string
    bool quoted = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) {
        raw.resize(i);
        break;
      }
    }
    if (trim(raw).empty()) continue;
    auto eq = raw.find('=');
    int key_col = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
    if (eq == std::string::npos) syntax(line, key_col, "expected 'key = value'");
    Entry e;
    e.key = trim(raw.substr(0, eq));
    e.line = line;
    e.column = key_col;
    if (e.key.empty()) syntax(line, key_col, "missing key");
    for (char c : e.key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        syntax(line, key_col, "invalid key '" + e.key + "'");
    std::string v = trim(raw.substr(eq + 1));
    int vcol = static_cast<int>(eq + 2);
    if (v.empty()) syntax(line, vcol, "missing value for '" + e.key + "'");
    if (v.front() == '[') {
      if (v.back() != ']') syntax(line, vcol, "unterminated list");
      e.list = true;
      std::string body = trim(v.substr(1, v.size() - 2));
      if (!body.empty())
        for (const auto& item : split(body, ',')) {
          std::string t = trim(item);
          if (t.empty()) syntax(line, vcol, "empty list element");
          e.items.push_back(unquote(t, line, vcol));
        }
    } else {
      e.items.push_back(unquote(v, line, vcol));
    }
    for (const auto& prev : out)
      if (prev.key == e.key) syntax(line, key_col, "duplicate key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

inline const std::string& one(const Entry& e) {
  if (e.list || e.items.size() != 1) invalid(e.key, "expected a single value");
  return e.items.front();
}

inline double number(const Entry& e) { return to_number(e.key, one(e)); }

inline long long integer(const Entry& e) {
  double v = number(e);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) invalid(e.key, "expected an integer");
  return static_cast<long long>(v);
}

inline std::size_t count(const Entry& e) {
  long long v = integer(e);
  if (v < 0) invalid(e.key, "must be >= 0");
  return static_cast<std::size_t>(v);
}

inline std::uint64_t unsigned_integer(const Entry& e) {
  const std::string& s = one(e);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) invalid(e.key, "expected a nonnegative integer");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    invalid(e.key, "integer out of range");
  }
}

inline std::vector<double> number_list(const Entry& e) {
  std::vector<double> out;
  for (const auto& x : e.items) out.push_back(to_number(e.key, x));
  return out;
}

}  // namespace detail

// Strict "key = value" document: '#' comments, quoted strings, [a, b] lists.
// Unknown keys are ParseErrors with a spelling suggestion; bad values are ValidationErrors.
// With strict = false an unknown key is reported through `warnings` and skipped.
inline RunConfig parse_config(const std::string& text, bool strict = true, std::vector<std::string>* warnings = nullptr) {
  RunConfig c;
  std::optional<int> d, n;
  std::optional<double> L;
  std::string kernel_id = c.sim.kernel_id, mu_id = c.sim.mu_id;
  for (const auto& e : detail::read_entries(text)) {
    const std::string& key = e.key;
    const auto& keys = detail::config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      std::string hint = detail::suggest_key(key);
      std::string msg = "line " + std::to_string(e.line) + ", column " + std::to_string(e.column) + ": unknown key '" +
                        key + "'" + (hint.empty() ? "" : "; did you mean '" + hint + "'?");
      if (strict) throw ConfigError(Errc::ParseError, key, msg, e.line, e.column);
      if (warnings) warnings->push_back(msg);
      continue;
    }
    if (key == "version") c.schema_version = static_cast<int>(detail::integer(e));
    else if (key == "dimension") d = static_cast<int>(detail::integer(e));
    else if (key == "L") L = detail::number(e);
    else if (key == "n") n = static_cast<int>(detail::integer(e));
    else if (key == "kernel") kernel_id = detail::one(e);
    else if (key == "coefficient") c.coefficient = detail::one(e);
    else if (key == "lambda") c.lambda = detail::number(e);
    else if (key == "saturation") c.saturation = detail::number(e);
    else if (key == "mu") mu_id = detail::one(e);
    else if (key == "mu2") c.mu2_id = detail::one(e);
    else if (key == "dt") c.sim.dt = detail::number(e);
    else if (key == "T") c.sim.T = detail::number(e);
    else if (key == "snapshot_times") c.sim.snapshot_times = detail::number_list(e);
    else if (key == "replicates") c.sim.replicates = static_cast<int>(detail::integer(e));
    else if (key == "seed") c.sim.seed = detail::unsigned_integer(e);
    else if (key == "K_list") c.sim.K_list = detail::number_list(e);
    else if (key == "zero_mode") {
      auto s = detail::one(e);
      if (s == "drop") c.sim.zero_mode = ZeroMode::Drop;
      else if (s == "keep") c.sim.zero_mode = ZeroMode::Keep;
      else detail::invalid(key, "expected drop or keep");
    } else if (key == "deposit") {
      auto s = detail::one(e);
      if (s == "nearest") c.sim.deposit = DepositMode::Nearest;
      else if (s == "gaussian") c.sim.deposit = DepositMode::Gaussian;
      else detail::invalid(key, "expected nearest or gaussian");
    } else if (key == "lambdas") c.lambdas = detail::number_list(e);
    else if (key == "phase_T") c.phase_T = detail::number(e);
    else if (key == "phase_dt") c.phase_dt = detail::number(e);
    else if (key == "alpha_grid") c.alpha_grid = detail::number_list(e);
    else if (key == "t_grid") c.t_grid = detail::number_list(e);
    else if (key == "t_max") c.t_max = detail::number(e);
    else if (key == "beta") c.beta = detail::number(e);
    else if (key == "volterra_T") c.volterra_T = detail::number(e);
    else if (key == "volterra_dt") c.volterra_dt = detail::number(e);
    else if (key == "samples") c.samples = detail::count(e);
    else if (key == "path_n") c.path_n = static_cast<int>(detail::integer(e));
    else if (key == "alphas") c.alphas = detail::number_list(e);
    else if (key == "conditioned_alphas") c.conditioned_alphas = detail::number_list(e);
    else if (key == "snapshot_format") {
      c.snapshot_format = detail::one(e);
      if (c.snapshot_format != "csv" && c.snapshot_format != "binary" && c.snapshot_format != "both")
        detail::invalid(key, "expected csv, binary or both");
    } else if (key == "conditioned_samples") c.conditioned_samples = detail::count(e);
  }

  if (c.schema_version != kSchemaVersion) detail::invalid("version", "unsupported schema version");
  auto& g = c.sim.grid;
  if (d) g.d = *d;
  if (L) g.L = *L;
  if (n) g.n = *n;
  if (g.d < 1 || g.d > 3) detail::invalid("dimension", "must be 1, 2 or 3");
  if (!(g.L > 0)) detail::invalid("L", "must be positive");
  if (g.n < 2 || (g.n & (g.n - 1))) detail::invalid("n", "must be a power of two");
  if (c.sim.dt && !(*c.sim.dt > 0)) detail::invalid("dt", "must be positive");
  if (!(c.sim.T > 0)) detail::invalid("T", "must be positive");
  if (c.sim.replicates < 1) detail::invalid("replicates", "must be >= 1");
  for (double t : c.sim.snapshot_times)
    if (t < 0 || t > c.sim.T) detail::invalid("snapshot_times", "must lie in [0, T]");
  for (std::size_t i = 0; i < c.sim.K_list.size(); ++i)
    if (!(c.sim.K_list[i] > 0) || (i && !(c.sim.K_list[i] > c.sim.K_list[i - 1])))
      detail::invalid("K_list", "must be positive and increasing");
  if (!(c.phase_T > 0)) detail::invalid("phase_T", "must be positive");
  if (!(c.phase_dt > 0)) detail::invalid("phase_dt", "must be positive");
  if (!(c.beta >= 0)) detail::invalid("beta", "must be >= 0");
  if (!(c.volterra_T > 0)) detail::invalid("volterra_T", "must be positive");
  if (!(c.volterra_dt > 0)) detail::invalid("volterra_dt", "must be positive");
  if (c.path_n < 16) detail::invalid("path_n", "must be >= 16");
  if (c.samples < 2) detail::invalid("samples", "must be >= 2");
  if (!(c.t_max >= 1)) detail::invalid("t_max", "must be >= 1");

  c.sim.kernel_id = kernel_id;
  c.sim.kernel = parse_kernel(kernel_id);
  c.sim.mu_id = mu_id;
  c.sim.mu = parse_measure(mu_id, g.d);
  if (!c.mu2_id.empty()) c.mu2 = parse_measure(c.mu2_id, g.d, "mu2");
  try {
    if (c.coefficient == "pam") c.sim.b = DiffusionCoefficient::pam(c.lambda);
    else if (c.coefficient == "sine") c.sim.b = DiffusionCoefficient::sine(c.lambda);
    else if (c.coefficient == "saturating") c.sim.b = DiffusionCoefficient::saturating(c.lambda, c.saturation);
    else detail::invalid("coefficient", "expected pam, sine or saturating");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    detail::invalid("lambda", e.what());
  }
  return c;
}

}  // namespace pamlab
