#include "mpa/runner.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mpa/ensemble.hpp"
#include "mpa/error.hpp"
#include "mpa/format.hpp"
#include "mpa/parallel.hpp"
#include "mpa/spectral.hpp"

namespace mpa {

namespace {

Eigen::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::string site_cell(const Site& s) {
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) out += (k ? ";" : "") + std::to_string(s[k]);
  return out;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_g17(*v) : ""; }

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << '\n';
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return format_g17(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }
  std::ostringstream os_;
};

struct Output {
  std::string csv;
  std::ostringstream summary;
  nlohmann::json results = nlohmann::json::object();
  nlohmann::json notes = nlohmann::json::object();
  std::optional<std::string> matrix;
};

AssemblyOptions serial() {
  AssemblyOptions o;
  o.workers = 1;
  return o;
}

std::string dump_matrix(const HamiltonianMatrix& H) {
  std::ostringstream os;
  H.write_coordinate_list(os);
  return os.str();
}

void run_spectrum(const ExperimentConfig& cfg, Output& out) {
  const Cube cube(cfg.resolved_center(), cfg.L);
  const auto region = projection_region(cube);
  DiagonalizeOptions values;
  values.vectors = false;
  const auto spectra = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const auto field = sample_field(cfg.disorder, region, r);
    return diagonalize(assemble_hamiltonian(cube, field, cfg.interaction, serial()), values)
        .eigenvalues;
  });
  Csv csv({"realization", "index", "eigenvalue"});
  for (std::size_t r = 0; r < spectra.size(); ++r) {
    for (Eigen::Index j = 0; j < spectra[r].size(); ++j) csv.row(r, j, spectra[r](j));
  }
  out.csv = csv.str();
  out.results["dimension"] = cube.cardinality();
  out.results["min_eigenvalue_realization0"] = spectra[0].minCoeff();
  out.results["max_eigenvalue_realization0"] = spectra[0].maxCoeff();
  out.summary << "spectrum: " << spectra.size() << " realization(s), dimension "
              << cube.cardinality() << "\n  realization 0 spans [" << format_g17(spectra[0].minCoeff())
              << ", " << format_g17(spectra[0].maxCoeff()) << "]\n";
  if (cfg.emit_matrix) {
    out.matrix = dump_matrix(assemble_hamiltonian(cube, sample_field(cfg.disorder, region, 0),
                                                  cfg.interaction, serial()));
  }
}

void run_green(const ExperimentConfig& cfg, Output& out) {
  const Cube cube(cfg.resolved_center(), cfg.L);
  const auto region = projection_region(cube);
  const Site base = cfg.green.base.value_or(cube.center());
  if (!cube.contains(base)) throw ConfigError("green.base must lie in the cube");
  const std::size_t y = cube.index_of(base);
  const double E = cfg.green.E;
  struct Trial {
    Eigen::VectorXd column;
    double residual = 0.0;
    double distance = 0.0;
    CombesThomasReport ct;
  };
  const auto trials = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const auto field = sample_field(cfg.disorder, region, r);
    const auto H = assemble_hamiltonian(cube, field, cfg.interaction, serial());
    DiagonalizeOptions values;
    values.vectors = false;
    Trial t;
    t.distance = dist_to_spectrum(diagonalize(H, values), E);
    t.column = GreenSolver(H, E).column(y);
    Eigen::VectorXd res = H.apply(t.column) - E * t.column;
    res(as_index(y)) -= 1.0;
    t.residual = res.cwiseAbs().maxCoeff();
    const double eta = cfg.green.eta.value_or(std::min(1.0, t.distance) * (1.0 - 1e-6));
    t.ct = combes_thomas_check_serial(H, E, eta);
    return t;
  });
  Csv csv({"realization", "x_index", "x", "G_x_base", "dist_to_spectrum", "ct_eta",
           "ct_worst_ratio", "ct_holds"});
  double worst_residual = 0.0;
  double worst_ratio = 0.0;
  bool all_hold = true;
  for (std::size_t r = 0; r < trials.size(); ++r) {
    const Trial& t = trials[r];
    worst_residual = std::max(worst_residual, t.residual);
    worst_ratio = std::max(worst_ratio, t.ct.worst_ratio);
    all_hold = all_hold && t.ct.holds;
    for (Eigen::Index i = 0; i < t.column.size(); ++i) {
      csv.row(r, i, site_cell(cube.site_at(static_cast<std::size_t>(i))), t.column(i), t.distance,
              t.ct.eta, t.ct.worst_ratio, t.ct.holds);
    }
  }
  out.csv = csv.str();
  out.results["max_resolvent_residual"] = worst_residual;
  out.results["combes_thomas_worst_ratio"] = worst_ratio;
  out.results["combes_thomas_holds"] = all_hold;
  out.summary << "green: E = " << format_g17(E) << ", base " << site_cell(base) << "\n"
              << "  max |(H-E)g - e_y| = " << format_g17(worst_residual) << "\n"
              << "  Combes-Thomas worst ratio " << format_g17(worst_ratio)
              << (all_hold ? " (holds)" : " (VIOLATED)") << "\n";
  if (cfg.emit_matrix) {
    out.matrix = dump_matrix(assemble_hamiltonian(cube, sample_field(cfg.disorder, region, 0),
                                                  cfg.interaction, serial()));
  }
}

void run_wegner(const ExperimentConfig& cfg, Output& out) {
  WegnerConfig w;
  w.dims = cfg.dims;
  w.L1 = cfg.wegner.L1;
  w.L2 = cfg.wegner.L2;
  w.u = *cfg.wegner.u;
  w.v = *cfg.wegner.v;
  w.disorder = cfg.disorder;
  w.interaction = cfg.interaction;
  w.s_grid = cfg.wegner.s;
  w.trials = cfg.trials;
  w.modulus_trials = cfg.wegner.modulus_trials;
  w.workers = cfg.workers;
  const WegnerResult res = wegner_experiment(w);
  Csv csv({"s", "trials", "successes", "p_hat", "ci_lo", "ci_hi", "bound_closed_form", "nu_hat_2s",
           "bound_empirical", "closed_form_holds"});
  for (const auto& p : res.points) {
    csv.row(p.s, p.estimate.trials, p.estimate.successes, p.estimate.p_hat, p.estimate.ci_lo,
            p.estimate.ci_hi, opt_cell(p.bound_closed_form), opt_cell(p.nu_hat),
            opt_cell(p.bound_empirical), p.closed_form_holds);
  }
  out.csv = csv.str();
  out.results["monotone_in_s"] = res.monotone;
  out.results["zero_distance_events"] = res.zero_distance_events;
  out.results["cube_cardinalities"] = {res.card1, res.card2};
  out.results["region_size"] = res.region_size;
  if (res.zero_distance_events > 0 && cfg.disorder.continuous()) {
    out.notes["audit"] = "exact spectral collision observed under a continuous law";
  }
  out.summary << "wegner: |C1| = " << res.card1 << ", |C2| = " << res.card2
              << ", |Q| = " << res.region_size << ", monotone in s: "
              << (res.monotone ? "yes" : "NO") << "\n";
  for (const auto& p : res.points) {
    out.summary << "  s = " << format_g17(p.s) << ": p_hat " << format_g17(p.estimate.p_hat)
                << " CI [" << format_g17(p.estimate.ci_lo) << ", " << format_g17(p.estimate.ci_hi)
                << "]";
    if (p.bound_closed_form) out.summary << ", closed-form bound " << format_g17(*p.bound_closed_form);
    if (p.bound_empirical) out.summary << ", empirical bound " << format_g17(*p.bound_empirical);
    out.summary << "\n";
  }
}

void run_lifshitz(const ExperimentConfig& cfg, Output& out) {
  Csv csv({"L0", "threshold", "trials", "successes", "p_hat", "ci_lo", "ci_hi"});
  out.summary << "lifshitz: P{E_0 <= 2 C L0^{-1/2}}, C = " << format_g17(cfg.lifshitz.C) << "\n";
  nlohmann::json rows = nlohmann::json::array();
  for (int L0 : cfg.lifshitz.L0) {
    LifshitzConfig l;
    l.dims = cfg.dims;
    l.L0 = L0;
    l.center = cfg.resolved_center();
    l.disorder = cfg.disorder;
    l.interaction = cfg.interaction;
    l.C = cfg.lifshitz.C;
    l.trials = cfg.trials;
    l.workers = cfg.workers;
    const auto res = lifshitz_experiment(l);
    const auto& e = res.estimate;
    csv.row(L0, res.threshold, e.trials, e.successes, e.p_hat, e.ci_lo, e.ci_hi);
    rows.push_back({{"L0", L0}, {"p_hat", e.p_hat}});
    out.summary << "  L0 = " << L0 << ": p_hat " << format_g17(e.p_hat) << " CI ["
                << format_g17(e.ci_lo) << ", " << format_g17(e.ci_hi) << "]\n";
  }
  out.csv = csv.str();
  out.results["points"] = rows;
}

void run_scan(const ExperimentConfig& cfg, Output& out) {
  SingularityConfig s;
  s.dims = cfg.dims;
  s.L = cfg.L;
  s.u = *cfg.scan.u;
  s.v = *cfg.scan.v;
  s.disorder = cfg.disorder;
  s.interaction = cfg.interaction;
  s.params = cfg.msa;
  s.trials = cfg.trials;
  s.grid_cap = cfg.scan.grid_cap;
  s.workers = cfg.workers;
  const auto res = singularity_probability(s);
  const auto& e = res.estimate;
  Csv csv({"L", "m", "p", "trials", "successes", "p_hat", "ci_lo", "ci_hi", "ds_bound",
           "ds_bound_two_p", "resonant_events", "max_grid_points"});
  csv.row(cfg.L, cfg.msa.m, cfg.msa.p, e.trials, e.successes, e.p_hat, e.ci_lo, e.ci_hi,
          res.ds_bound, res.ds_bound_two_p, res.resonant_events, res.max_grid_points);
  out.csv = csv.str();
  out.results["E_star_clipped"] = res.clipped;
  out.results["signed_lower_endpoint"] = res.signed_lower_endpoint;
  if (res.clipped) {
    out.notes["E_star_clipping"] =
        "E* exceeded the realized spectrum; the upper end of I was clipped to the largest "
        "eigenvalue of the two cubes in the affected realizations";
  }
  if (res.signed_lower_endpoint) {
    out.notes["lower_endpoint"] =
        "signed disorder: the lower end of I is the realized minimum eigenvalue per realization";
  }
  out.summary << "msa-scan: L = " << cfg.L << ", m = " << format_g17(cfg.msa.m) << "\n  p_hat "
              << format_g17(e.p_hat) << " CI [" << format_g17(e.ci_lo) << ", "
              << format_g17(e.ci_hi) << "] vs L^{-p 2^{N-n+1}} = " << format_g17(res.ds_bound)
              << "\n";
}

void run_decay(const ExperimentConfig& cfg, Output& out) {
  DecayConfig dc;
  dc.dims = cfg.dims;
  dc.L = cfg.L;
  dc.center = cfg.resolved_center();
  dc.disorder = cfg.disorder;
  dc.interaction = cfg.interaction;
  dc.interval = cfg.decay.interval;
  dc.lowest = cfg.decay.lowest;
  dc.trials = cfg.trials;
  dc.distance_floor = cfg.decay.distance_floor;
  dc.amplitude_floor = cfg.decay.amplitude_floor;
  dc.workers = cfg.workers;
  const auto res = eigenfunction_decay(dc);
  Csv csv({"realization", "eigen_index", "energy", "center", "slope", "intercept", "r_squared",
           "mass", "delocalized", "skipped"});
  for (const auto& f : res.fits) {
    if (f.skipped) {
      csv.row(f.realization, f.eigen_index, f.energy, site_cell(f.center), "", "", "", "", "",
              *f.skipped);
    } else {
      csv.row(f.realization, f.eigen_index, f.energy, site_cell(f.center), f.slope, f.intercept,
              f.r_squared, f.mass(), f.delocalized, "");
    }
  }
  out.csv = csv.str();
  out.results["fitted"] = res.fitted;
  out.results["skipped"] = res.skipped;
  out.results["median_mass"] = res.median_mass;
  out.results["median_r_squared"] = res.median_r_squared;
  out.summary << "decay: " << res.fitted << " fits, " << res.skipped << " skipped\n"
              << "  median mass " << format_g17(res.median_mass) << ", median r^2 "
              << format_g17(res.median_r_squared) << "\n";
}

void run_dynloc(const ExperimentConfig& cfg, Output& out) {
  const Cube cube(cfg.resolved_center(), cfg.L);
  const auto region = projection_region(cube);
  std::vector<std::size_t> K;
  for (const Site& s : cube_sites(Cube(cube.center(), cfg.dynloc.K_radius))) {
    K.push_back(cube.index_of(s));
  }
  std::optional<std::pair<double, double>> trace;
  if (cfg.dynloc.trace_C) trace = std::make_pair(*cfg.dynloc.trace_C, *cfg.dynloc.trace_kappa);
  const auto per = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const auto field = sample_field(cfg.disorder, region, r);
    const auto decomp = diagonalize(assemble_hamiltonian(cube, field, cfg.interaction, serial()));
    const auto I = cfg.dynloc.interval.value_or(
        std::make_pair(decomp.eigenvalues.minCoeff(), decomp.eigenvalues.maxCoeff()));
    std::vector<DynamicalMoment> m;
    for (double s : cfg.dynloc.s) m.push_back(dynamical_moment(cube, decomp, I, s, K, trace, cfg.dims.N));
    return m;
  });
  Csv csv({"realization", "s", "moment", "trace_count", "trace_event"});
  std::vector<double> first;
  for (std::size_t r = 0; r < per.size(); ++r) {
    for (std::size_t k = 0; k < per[r].size(); ++k) {
      const auto& m = per[r][k];
      csv.row(r, cfg.dynloc.s[k], m.moment, m.trace_count,
              m.trace_event ? (*m.trace_event ? "true" : "false") : "");
      if (k == 0) first.push_back(m.moment);
    }
  }
  out.csv = csv.str();
  out.results["median_moment_first_s"] = median(first);
  out.notes["moment"] =
      "sum_x |x|^s max_{y in K} Q_I(x,y), an upper surrogate of the squared operator moment";
  out.summary << "dynloc: median moment at s = " << format_g17(cfg.dynloc.s.front()) << " is "
              << format_g17(median(first)) << "\n";
}

void run_modulus(const ExperimentConfig& cfg, Output& out) {
  const auto Q = cube_sites(Cube(Site::origin(cfg.dims.d, 1), cfg.L));
  std::vector<double> t = cfg.modulus.t;
  std::sort(t.begin(), t.end());
  const auto est = estimate_modulus(cfg.disorder, Q, t, cfg.trials, cfg.workers);
  const auto* g = std::get_if<Gaussian>(&cfg.disorder.law);
  Csv csv({"t", "raw", "nu_hat", "dkw_halfwidth", "gaussian_closed_form"});
  for (std::size_t i = 0; i < t.size(); ++i) {
    csv.row(t[i], est.raw[i], est.nu_hat[i], est.dkw_halfwidth,
            g ? format_g17(gaussian_mean_modulus(t[i], Q.size(), g->stdev)) : std::string());
  }
  out.csv = csv.str();
  out.results["region_size"] = Q.size();
  out.notes["modulus"] =
      "the conditional CDF of the sample mean is replaced by its marginal CDF over realizations";
  out.summary << "modulus: |Q| = " << Q.size() << ", " << est.trials << " trials\n";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunArtifacts execute(const ExperimentConfig& cfg) {
  cfg.validate();
  Output out;
  switch (cfg.experiment) {
    case Experiment::Spectrum: run_spectrum(cfg, out); break;
    case Experiment::Green: run_green(cfg, out); break;
    case Experiment::Wegner: run_wegner(cfg, out); break;
    case Experiment::Lifshitz: run_lifshitz(cfg, out); break;
    case Experiment::MsaScan: run_scan(cfg, out); break;
    case Experiment::Decay: run_decay(cfg, out); break;
    case Experiment::Dynloc: run_dynloc(cfg, out); break;
    case Experiment::Modulus: run_modulus(cfg, out); break;
  }
  RunArtifacts art;
  art.csv = std::move(out.csv);
  art.matrix = std::move(out.matrix);
  const std::string text = cfg.canonical_text();
  out.notes["gamma_exponent"] = "gamma(m,L,n) = m (1 + L^{-" +
                                std::string(cfg.msa.gamma_exponent == GammaExponent::Quarter
                                                ? "1/4"
                                                : "1/8") +
                                "})^{N-n+1}";
  out.notes["resonance_merging"] =
      "E-resonant cubes are classified singular; each verdict records whether resonance decided it";
  if (!out.notes.contains("E_star_clipping")) {
    out.notes["E_star_clipping"] =
        "I = [E_0, E*] is clipped to the realized spectral range when E* exceeds it";
  }
  art.manifest = {
      {"tool", "mpanderson"},
      {"experiment", to_string(cfg.experiment)},
      {"config", cfg.to_json()},
      {"config_text", text},
      {"input_hash", git_blob_sha1(text)},
      {"gamma_exponent", to_string(cfg.msa.gamma_exponent)},
      {"notes", out.notes},
      {"results", out.results},
  };
  art.summary = out.summary.str() + "input hash " + git_blob_sha1(text) + "\n";
  return art;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->category()) {
      case ErrorCategory::Config:
      case ErrorCategory::Precondition:
        return 2;
      case ErrorCategory::Capacity:
        return 3;
      case ErrorCategory::Numeric:
        return 4;
    }
  }
  return 1;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xF];
  }
  return hex;
}

RunOutcome run(const ExperimentConfig& cfg) {
  RunOutcome outcome;
  try {
    RunArtifacts art = execute(cfg);
    art.manifest["timestamp"] = utc_timestamp();
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    // Everything is computed before the first write.
    atomic_write(dir / "results.csv", art.csv);
    atomic_write(dir / "manifest.json", art.manifest.dump(2) + "\n");
    atomic_write(dir / "summary.txt", art.summary);
    if (art.matrix) atomic_write(dir / "matrix.txt", *art.matrix);
    outcome.message = art.summary;
  } catch (const std::exception& e) {
    outcome.status = exit_code_for(e);
    outcome.message = e.what();
  }
  return outcome;
}

}  // namespace mpa
