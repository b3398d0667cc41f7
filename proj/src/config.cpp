#include "mpa/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mpa/error.hpp"
#include "mpa/format.hpp"

namespace mpa {

namespace {

constexpr std::pair<Experiment, std::string_view> kExperimentNames[] = {
    {Experiment::Spectrum, "spectrum"}, {Experiment::Green, "green"},
    {Experiment::Wegner, "wegner"},     {Experiment::Lifshitz, "lifshitz"},
    {Experiment::MsaScan, "msa-scan"},  {Experiment::Decay, "decay"},
    {Experiment::Dynloc, "dynloc"},     {Experiment::Modulus, "modulus"},
};

const std::set<std::string>& global_keys() {
  static const std::set<std::string> keys{"experiment", "d",       "n",   "N",
                                          "seed",       "trials",  "workers", "out",
                                          "emit_matrix", "L",      "center"};
  return keys;
}

// Section -> (experiment it belongs to, or none for shared sections; keys).
struct Section {
  std::optional<Experiment> owner;
  std::set<std::string> keys;
};

const std::map<std::string, Section>& sections() {
  static const std::map<std::string, Section> s{
      {"disorder", {std::nullopt, {"law", "mean", "stdev", "a", "b", "p", "w", "value"}}},
      {"interaction", {std::nullopt, {"r0", "phi"}}},
      {"msa", {std::nullopt, {"alpha", "beta", "p", "m", "L0", "E_star", "gamma_exponent"}}},
      {"green", {Experiment::Green, {"E", "base", "eta"}}},
      {"wegner", {Experiment::Wegner, {"L1", "L2", "u", "v", "s", "modulus_trials"}}},
      {"lifshitz", {Experiment::Lifshitz, {"L0", "C"}}},
      {"scan", {Experiment::MsaScan, {"u", "v", "grid_cap"}}},
      {"decay", {Experiment::Decay, {"lowest", "interval", "distance_floor", "amplitude_floor"}}},
      {"dynloc", {Experiment::Dynloc, {"interval", "s", "K_radius", "trace_C", "trace_kappa"}}},
      {"modulus", {Experiment::Modulus, {"t"}}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line(const std::string& key) const { return entries_.at(key).line; }

  std::optional<std::string> raw(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? "" : "line " + std::to_string(it->second.line) + ": ";
    throw ConfigError(where + key + ": " + msg);
  }

  template <class T>
  T integer_value(const std::string& key, const std::string& text) const {
    T v{};
    const auto* b = text.data();
    const auto* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e || text.empty()) {
      fail(key, "expects an integer, got '" + text + "'");
    }
    return v;
  }

  double real_value(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto* b = text.data();
    const auto* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e || text.empty() || !std::isfinite(v)) {
      fail(key, "expects a finite real number, got '" + text + "'");
    }
    return v;
  }

  template <class T>
  void get_int(const std::string& key, T& out) {
    if (auto r = raw(key)) out = integer_value<T>(key, *r);
  }

  void get_real(const std::string& key, double& out) {
    if (auto r = raw(key)) out = real_value(key, *r);
  }

  void get_real(const std::string& key, std::optional<double>& out) {
    if (auto r = raw(key)) out = real_value(key, *r);
  }

  void get_bool(const std::string& key, bool& out) {
    if (auto r = raw(key)) {
      if (*r == "true") {
        out = true;
      } else if (*r == "false") {
        out = false;
      } else {
        fail(key, "expects true or false, got '" + *r + "'");
      }
    }
  }

  void get_reals(const std::string& key, std::vector<double>& out) {
    if (auto r = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*r)) out.push_back(real_value(key, item));
      if (out.empty()) fail(key, "expects a nonempty comma-separated list");
    }
  }

  template <class T>
  void get_ints(const std::string& key, std::vector<T>& out) {
    if (auto r = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*r)) out.push_back(integer_value<T>(key, item));
      if (out.empty()) fail(key, "expects a nonempty comma-separated list");
    }
  }

  void get_site(const std::string& key, const Dims& dims, std::optional<Site>& out) {
    std::vector<Coord> coords;
    if (!has(key)) return;
    get_ints(key, coords);
    if (coords.size() != static_cast<std::size_t>(dims.flat())) {
      fail(key, "expects n*d = " + std::to_string(dims.flat()) + " integer coordinates");
    }
    out = Site(dims.d, std::move(coords));
  }

  void get_interval(const std::string& key, std::optional<std::pair<double, double>>& out) {
    std::vector<double> v;
    if (!has(key)) return;
    get_reals(key, v);
    if (v.size() != 2 || !(v[0] <= v[1])) fail(key, "expects 'lo, hi' with lo <= hi");
    out = std::make_pair(v[0], v[1]);
  }

  void check_all_used(Experiment e) const {
    for (const auto& [key, entry] : entries_) {
      if (entry.used) continue;
      const auto dot = key.find('.');
      if (dot != std::string::npos) {
        const auto sec = sections().find(key.substr(0, dot));
        if (sec != sections().end() && sec->second.keys.count(key.substr(dot + 1)) != 0) {
          if (sec->second.owner && *sec->second.owner != e) {
            throw ConfigError("line " + std::to_string(entry.line) + ": key '" + key +
                              "' does not apply to experiment '" + to_string(e) + "'");
          }
          throw ConfigError("line " + std::to_string(entry.line) + ": key '" + key +
                            "' does not apply to this disorder law");
        }
      }
      throw ConfigError("line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

bool is_known_key(const std::string& key) {
  if (global_keys().count(key) != 0) return true;
  const auto dot = key.find('.');
  if (dot == std::string::npos) return false;
  const auto sec = sections().find(key.substr(0, dot));
  return sec != sections().end() && sec->second.keys.count(key.substr(dot + 1)) != 0;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_g17(v[i]);
  return s;
}

template <class T>
std::string join_ints(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

Site shifted(const Site& base, Coord offset) {
  auto c = base.coords();
  c[0] += offset;
  return Site(base.d(), std::move(c));
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == e) return std::string(name);
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(name) +
                    "' (expected spectrum, green, wegner, lifshitz, msa-scan, decay, dynloc or "
                    "modulus)");
}

Site ExperimentConfig::resolved_center() const {
  return center ? *center : Site::origin(dims.d, dims.n);
}

void ExperimentConfig::validate() const {
  dims.validate();
  disorder.validate();
  interaction.validate();
  msa.validate();
  if (msa.N != dims.N) throw ConfigError("msa.N must equal N");
  if (L < 0) throw ConfigError("L must be nonnegative");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (out.empty()) throw ConfigError("out must be a nonempty path");
  switch (experiment) {
    case Experiment::Green:
      if (green.eta && !(*green.eta > 0.0 && *green.eta <= 1.0)) {
        throw ConfigError("green.eta must lie in (0, 1]");
      }
      break;
    case Experiment::Wegner:
      if (wegner.L1 < 0 || wegner.L2 < 0) throw ConfigError("wegner radii must be nonnegative");
      for (double s : wegner.s) {
        if (s < 0.0) throw ConfigError("wegner.s values must be nonnegative");
      }
      if (wegner.modulus_trials != 0 && wegner.modulus_trials < 1000) {
        throw ConfigError("wegner.modulus_trials must be 0 or at least 1000");
      }
      break;
    case Experiment::Lifshitz:
      if (!disorder.nonnegative()) {
        throw ConfigError("lifshitz needs nonnegative disorder; " + disorder.name() +
                          " is signed");
      }
      for (int l : lifshitz.L0) {
        if (l < 1) throw ConfigError("lifshitz.L0 values must be >= 1");
      }
      if (!(lifshitz.C > 0.0)) throw ConfigError("lifshitz.C must be positive");
      break;
    case Experiment::MsaScan:
      if (L < 1) throw ConfigError("msa-scan needs L >= 1");
      break;
    case Experiment::Decay:
      if (L < 3) throw ConfigError("decay needs L >= 3");
      break;
    case Experiment::Dynloc:
      for (double s : dynloc.s) {
        if (s < 0.0) throw ConfigError("dynloc.s values must be nonnegative");
      }
      if (dynloc.K_radius < 0 || dynloc.K_radius > L) {
        throw ConfigError("dynloc.K_radius must lie in [0, L]");
      }
      if (dynloc.trace_C.has_value() != dynloc.trace_kappa.has_value()) {
        throw ConfigError("dynloc.trace_C and dynloc.trace_kappa go together");
      }
      break;
    case Experiment::Modulus:
      if (trials < 1000) throw ConfigError("modulus needs trials >= 1000");
      for (double t : modulus.t) {
        if (t < 0.0) throw ConfigError("modulus.t values must be nonnegative");
      }
      break;
    case Experiment::Spectrum:
      break;
  }
}

ExperimentConfig parse_config(std::string_view text, std::optional<Experiment> experiment,
                              const ConfigOverrides& overrides) {
  std::map<std::string, Entry> entries;
  std::istringstream is{std::string(text)};
  std::string raw_line;
  int lineno = 0;
  while (std::getline(is, raw_line)) {
    ++lineno;
    const auto hash = raw_line.find('#');
    const std::string line = trim(hash == std::string::npos ? raw_line : raw_line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!is_known_key(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' has no value");
    }
    auto [it, fresh] = entries.emplace(key, Entry{value, lineno, false});
    if (!fresh) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(it->second.line) + ")");
    }
  }

  Reader r(std::move(entries));
  ExperimentConfig cfg;
  if (auto e = r.raw("experiment")) {
    Experiment named{};
    try {
      named = parse_experiment(*e);
    } catch (const ConfigError& err) {
      r.fail("experiment", err.what());
    }
    if (experiment && *experiment != named) {
      r.fail("experiment", "config names '" + *e + "' but the command asks for '" +
                               to_string(*experiment) + "'");
    }
    cfg.experiment = named;
  } else if (experiment) {
    cfg.experiment = *experiment;
  } else {
    throw ConfigError("no experiment given (set 'experiment' or pass a subcommand)");
  }

  r.get_int("d", cfg.dims.d);
  r.get_int("n", cfg.dims.n);
  cfg.dims.N = cfg.dims.n;
  r.get_int("N", cfg.dims.N);
  cfg.dims.validate();
  r.get_int("seed", cfg.disorder.seed);
  r.get_int("trials", cfg.trials);
  r.get_int("workers", cfg.workers);
  if (auto o = r.raw("out")) cfg.out = *o;
  r.get_bool("emit_matrix", cfg.emit_matrix);
  r.get_int("L", cfg.L);
  r.get_site("center", cfg.dims, cfg.center);

  const std::string law = r.raw("disorder.law").value_or("gaussian");
  if (law == "gaussian") {
    Gaussian g;
    r.get_real("disorder.mean", g.mean);
    r.get_real("disorder.stdev", g.stdev);
    cfg.disorder.law = g;
  } else if (law == "uniform") {
    Uniform u;
    r.get_real("disorder.a", u.a);
    r.get_real("disorder.b", u.b);
    cfg.disorder.law = u;
  } else if (law == "bernoulli") {
    Bernoulli b;
    r.get_real("disorder.p", b.p);
    r.get_real("disorder.w", b.w);
    cfg.disorder.law = b;
  } else if (law == "constant") {
    Constant c;
    r.get_real("disorder.value", c.value);
    cfg.disorder.law = c;
  } else {
    r.fail("disorder.law", "expects gaussian, uniform, bernoulli or constant, got '" + law + "'");
  }

  r.get_int("interaction.r0", cfg.interaction.r0);
  if (r.has("interaction.phi")) {
    r.get_reals("interaction.phi", cfg.interaction.phi);
    for (double v : cfg.interaction.phi) {
      if (v < 0.0) r.fail("interaction.phi", "entries must be nonnegative (phi >= 0)");
    }
  } else {
    cfg.interaction.phi.assign(static_cast<std::size_t>(std::max(0, cfg.interaction.r0)) + 1, 0.0);
  }
  if (cfg.interaction.r0 < 0) r.fail("interaction.r0", "must be nonnegative");
  if (cfg.interaction.phi.size() != static_cast<std::size_t>(cfg.interaction.r0) + 1) {
    r.fail("interaction.phi", "needs r0 + 1 = " + std::to_string(cfg.interaction.r0 + 1) +
                                  " entries");
  }

  if (auto a = r.raw("msa.alpha")) {
    if (*a != "3/2" && *a != "1.5") r.fail("msa.alpha", "alpha is fixed at 3/2");
  }
  if (auto b = r.raw("msa.beta")) {
    if (*b != "1/2" && *b != "0.5") r.fail("msa.beta", "beta is fixed at 1/2");
  }
  cfg.msa.N = cfg.dims.N;
  r.get_real("msa.p", cfg.msa.p);
  r.get_int("msa.L0", cfg.msa.L0);
  if (cfg.msa.L0 < 3) r.fail("msa.L0", "must be at least 3");
  const InitialConstants ic = initial_constants(cfg.dims.N, cfg.dims.d, cfg.msa.L0);
  cfg.msa.m = ic.m;
  cfg.msa.E_star = ic.E_star;
  r.get_real("msa.m", cfg.msa.m);
  r.get_real("msa.E_star", cfg.msa.E_star);
  if (auto g = r.raw("msa.gamma_exponent")) {
    try {
      cfg.msa.gamma_exponent = parse_gamma_exponent(*g);
    } catch (const ConfigError& err) {
      r.fail("msa.gamma_exponent", err.what());
    }
  }

  switch (cfg.experiment) {
    case Experiment::Green: {
      r.get_real("green.E", cfg.green.E);
      r.get_site("green.base", cfg.dims, cfg.green.base);
      r.get_real("green.eta", cfg.green.eta);
      break;
    }
    case Experiment::Wegner: {
      r.get_int("wegner.L1", cfg.wegner.L1);
      cfg.wegner.L2 = cfg.wegner.L1;
      r.get_int("wegner.L2", cfg.wegner.L2);
      r.get_site("wegner.u", cfg.dims, cfg.wegner.u);
      r.get_site("wegner.v", cfg.dims, cfg.wegner.v);
      r.get_reals("wegner.s", cfg.wegner.s);
      r.get_int("wegner.modulus_trials", cfg.wegner.modulus_trials);
      const Site u = cfg.wegner.u.value_or(Site::origin(cfg.dims.d, cfg.dims.n));
      cfg.wegner.u = u;
      if (!cfg.wegner.v) {
        const Coord sep = 2 * static_cast<Coord>(cfg.dims.N) * std::max(cfg.wegner.L1, cfg.wegner.L2);
        cfg.wegner.v = shifted(u, std::max<Coord>(10, sep));
      }
      break;
    }
    case Experiment::Lifshitz:
      r.get_ints("lifshitz.L0", cfg.lifshitz.L0);
      r.get_real("lifshitz.C", cfg.lifshitz.C);
      break;
    case Experiment::MsaScan: {
      r.get_site("scan.u", cfg.dims, cfg.scan.u);
      r.get_site("scan.v", cfg.dims, cfg.scan.v);
      r.get_int("scan.grid_cap", cfg.scan.grid_cap);
      const Site u = cfg.scan.u.value_or(cfg.resolved_center());
      cfg.scan.u = u;
      if (!cfg.scan.v) cfg.scan.v = shifted(u, 2 * static_cast<Coord>(cfg.dims.n) * cfg.L);
      break;
    }
    case Experiment::Decay:
      r.get_int("decay.lowest", cfg.decay.lowest);
      r.get_interval("decay.interval", cfg.decay.interval);
      r.get_int("decay.distance_floor", cfg.decay.distance_floor);
      r.get_real("decay.amplitude_floor", cfg.decay.amplitude_floor);
      break;
    case Experiment::Dynloc:
      r.get_interval("dynloc.interval", cfg.dynloc.interval);
      r.get_reals("dynloc.s", cfg.dynloc.s);
      r.get_int("dynloc.K_radius", cfg.dynloc.K_radius);
      r.get_real("dynloc.trace_C", cfg.dynloc.trace_C);
      r.get_real("dynloc.trace_kappa", cfg.dynloc.trace_kappa);
      break;
    case Experiment::Modulus:
      r.get_reals("modulus.t", cfg.modulus.t);
      break;
    case Experiment::Spectrum:
      break;
  }
  r.check_all_used(cfg.experiment);
  cfg.center = cfg.resolved_center();
  if (overrides.seed) cfg.disorder.seed = *overrides.seed;
  if (overrides.trials) cfg.trials = *overrides.trials;
  if (overrides.workers) cfg.workers = *overrides.workers;
  if (overrides.out) cfg.out = *overrides.out;
  if (overrides.emit_matrix) cfg.emit_matrix = true;
  if (overrides.gamma_exponent) cfg.msa.gamma_exponent = *overrides.gamma_exponent;
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  auto site = [](const Site& s) { return join_ints(s.coords()); };
  os << "experiment = " << to_string(experiment) << '\n';
  os << "d = " << dims.d << '\n' << "n = " << dims.n << '\n' << "N = " << dims.N << '\n';
  os << "seed = " << disorder.seed << '\n';
  os << "trials = " << trials << '\n';
  os << "L = " << L << '\n';
  os << "center = " << site(resolved_center()) << '\n';
  os << "disorder.law = " << disorder.name() << '\n';
  std::visit(
      [&os](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          os << "disorder.mean = " << format_g17(law.mean) << '\n'
             << "disorder.stdev = " << format_g17(law.stdev) << '\n';
        } else if constexpr (std::is_same_v<T, Uniform>) {
          os << "disorder.a = " << format_g17(law.a) << '\n'
             << "disorder.b = " << format_g17(law.b) << '\n';
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          os << "disorder.p = " << format_g17(law.p) << '\n'
             << "disorder.w = " << format_g17(law.w) << '\n';
        } else {
          os << "disorder.value = " << format_g17(law.value) << '\n';
        }
      },
      disorder.law);
  os << "interaction.r0 = " << interaction.r0 << '\n';
  os << "interaction.phi = " << join_reals(interaction.phi) << '\n';
  os << "msa.alpha = 3/2\n" << "msa.beta = 1/2\n";
  os << "msa.p = " << format_g17(msa.p) << '\n';
  os << "msa.m = " << format_g17(msa.m) << '\n';
  os << "msa.L0 = " << msa.L0 << '\n';
  os << "msa.E_star = " << format_g17(msa.E_star) << '\n';
  os << "msa.gamma_exponent = " << to_string(msa.gamma_exponent) << '\n';
  switch (experiment) {
    case Experiment::Green:
      os << "green.E = " << format_g17(green.E) << '\n';
      os << "green.base = " << site(green.base.value_or(resolved_center())) << '\n';
      os << "green.eta = " << (green.eta ? format_g17(*green.eta) : std::string("auto")) << '\n';
      break;
    case Experiment::Wegner:
      os << "wegner.L1 = " << wegner.L1 << '\n' << "wegner.L2 = " << wegner.L2 << '\n';
      os << "wegner.u = " << site(*wegner.u) << '\n' << "wegner.v = " << site(*wegner.v) << '\n';
      os << "wegner.s = " << join_reals(wegner.s) << '\n';
      os << "wegner.modulus_trials = " << wegner.modulus_trials << '\n';
      break;
    case Experiment::Lifshitz:
      os << "lifshitz.L0 = " << join_ints(lifshitz.L0) << '\n';
      os << "lifshitz.C = " << format_g17(lifshitz.C) << '\n';
      break;
    case Experiment::MsaScan:
      os << "scan.u = " << site(*scan.u) << '\n' << "scan.v = " << site(*scan.v) << '\n';
      os << "scan.grid_cap = " << scan.grid_cap << '\n';
      break;
    case Experiment::Decay:
      os << "decay.lowest = " << decay.lowest << '\n';
      os << "decay.interval = "
         << (decay.interval ? format_g17(decay.interval->first) + ", " +
                                  format_g17(decay.interval->second)
                            : std::string("none"))
         << '\n';
      os << "decay.distance_floor = " << decay.distance_floor << '\n';
      os << "decay.amplitude_floor = " << format_g17(decay.amplitude_floor) << '\n';
      break;
    case Experiment::Dynloc:
      os << "dynloc.interval = "
         << (dynloc.interval ? format_g17(dynloc.interval->first) + ", " +
                                   format_g17(dynloc.interval->second)
                             : std::string("spectrum"))
         << '\n';
      os << "dynloc.s = " << join_reals(dynloc.s) << '\n';
      os << "dynloc.K_radius = " << dynloc.K_radius << '\n';
      if (dynloc.trace_C) {
        os << "dynloc.trace_C = " << format_g17(*dynloc.trace_C) << '\n';
        os << "dynloc.trace_kappa = " << format_g17(*dynloc.trace_kappa) << '\n';
      }
      break;
    case Experiment::Modulus:
      os << "modulus.t = " << join_reals(modulus.t) << '\n';
      break;
    case Experiment::Spectrum:
      break;
  }
  return os.str();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  std::istringstream is(canonical_text());
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["workers"] = workers;
  j["out"] = out;
  j["emit_matrix"] = emit_matrix;
  return j;
}

}  // namespace mpa
