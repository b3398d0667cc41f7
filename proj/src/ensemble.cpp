#include "mpa/ensemble.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mpa/error.hpp"
#include "mpa/parallel.hpp"

namespace mpa {

namespace {

Eigen::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

Site default_center(const Dims& dims, const std::optional<Site>& c) {
  if (!c) return Site::origin(dims.d, dims.n);
  if (c->d() != dims.d || c->particles() != dims.n) {
    throw PreconditionError("cube center does not match (d, n)");
  }
  return *c;
}

void check_site(const Dims& dims, const Site& s, const char* what) {
  if (s.d() != dims.d || s.particles() != dims.n) {
    throw PreconditionError(std::string(what) + " does not match (d, n)");
  }
}

AssemblyOptions serial_assembly(Storage storage = Storage::Auto) {
  AssemblyOptions o;
  o.storage = storage;
  o.workers = 1;
  return o;
}

DiagonalizeOptions values_only() {
  DiagonalizeOptions o;
  o.vectors = false;
  return o;
}

}  // namespace

// --- statistics ------------------------------------------------------------

std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials,
                                          double confidence) {
  if (trials == 0) throw PreconditionError("confidence interval needs at least one trial");
  if (successes > trials) throw PreconditionError("successes exceed trials");
  const double alpha = 1.0 - confidence;
  const auto k = static_cast<double>(successes);
  const auto n = static_cast<double>(trials);
  double lo = 0.0;
  double hi = 1.0;
  if (successes > 0) {
    lo = boost::math::quantile(boost::math::beta_distribution<double>(k, n - k + 1.0), alpha / 2.0);
  }
  if (successes < trials) {
    hi = boost::math::quantile(boost::math::beta_distribution<double>(k + 1.0, n - k),
                               1.0 - alpha / 2.0);
  }
  return {lo, hi};
}

ProbabilityEstimate ProbabilityEstimate::from_counts(std::string name, std::size_t successes,
                                                     std::size_t trials, double confidence) {
  ProbabilityEstimate e;
  e.event_name = std::move(name);
  e.trials = trials;
  e.successes = successes;
  e.p_hat = static_cast<double>(successes) / static_cast<double>(trials);
  std::tie(e.ci_lo, e.ci_hi) = clopper_pearson(successes, trials, confidence);
  // Guard the containment invariant against quantile rounding at the ends.
  e.ci_lo = std::min(e.ci_lo, e.p_hat);
  e.ci_hi = std::max(e.ci_hi, e.p_hat);
  return e;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("KS statistic needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_1pct(std::size_t n, std::size_t m) {
  const auto a = static_cast<double>(n);
  const auto b = static_cast<double>(m);
  return 1.628 * std::sqrt((a + b) / (a * b));
}

LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw PreconditionError("regression needs at least two paired points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("regression needs distinct abscissae");
  LinearFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// --- Wegner ----------------------------------------------------------------

WegnerResult wegner_experiment(const WegnerConfig& cfg) {
  cfg.dims.validate();
  cfg.disorder.validate();
  cfg.interaction.validate();
  check_site(cfg.dims, cfg.u, "center u");
  check_site(cfg.dims, cfg.v, "center v");
  if (cfg.L1 < 0 || cfg.L2 < 0) throw PreconditionError("cube radii must be nonnegative");
  if (cfg.trials == 0) throw PreconditionError("wegner experiment needs trials >= 1");
  const Coord need = 2 * static_cast<Coord>(cfg.dims.N) * std::max(cfg.L1, cfg.L2);
  const Coord dist = sym_distance(cfg.u, cfg.v);
  if (dist < need) {
    throw PreconditionError("wegner cubes too close: d_S(u, v) = " + std::to_string(dist) +
                            " < 2 N max(L1, L2) = " + std::to_string(need));
  }
  for (double s : cfg.s_grid) {
    if (!(s >= 0.0)) throw PreconditionError("wegner s grid must be nonnegative");
  }

  const Cube c1(cfg.u, cfg.L1);
  const Cube c2(cfg.v, cfg.L2);
  const std::vector<Cube> both{c1, c2};
  const auto region = projection_region(std::span<const Cube>(both));
  const auto Q = projection_region(c1);

  WegnerResult res;
  res.card1 = c1.cardinality();
  res.card2 = c2.cardinality();
  res.region_size = Q.size();
  res.min_distances = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const FieldSample field = sample_field(cfg.disorder, region, r);
    const auto a = diagonalize(assemble_hamiltonian(c1, field, cfg.interaction, serial_assembly()),
                               values_only());
    const auto b = diagonalize(assemble_hamiltonian(c2, field, cfg.interaction, serial_assembly()),
                               values_only());
    return spectral_distance(a.eigenvalues, b.eigenvalues);
  });
  for (double d : res.min_distances) res.zero_distance_events += d == 0.0 ? 1 : 0;

  std::optional<ModulusEstimate> modulus;
  std::vector<double> t_sorted;
  if (cfg.modulus_trials > 0) {
    for (double s : cfg.s_grid) t_sorted.push_back(2.0 * s);
    std::sort(t_sorted.begin(), t_sorted.end());
    t_sorted.erase(std::unique(t_sorted.begin(), t_sorted.end()), t_sorted.end());
    modulus = estimate_modulus(cfg.disorder, Q, t_sorted, cfg.modulus_trials, cfg.workers);
  }

  const double cards = static_cast<double>(res.card1) * static_cast<double>(res.card2);
  const auto* g = std::get_if<Gaussian>(&cfg.disorder.law);
  for (double s : cfg.s_grid) {
    std::size_t hits = 0;
    for (double d : res.min_distances) hits += d <= s ? 1 : 0;
    WegnerPoint pt;
    pt.s = s;
    pt.estimate = ProbabilityEstimate::from_counts("min |lambda - mu| <= s", hits, cfg.trials);
    if (g != nullptr) {
      pt.bound_closed_form = cards * gaussian_mean_modulus(2.0 * s, Q.size(), g->stdev);
      pt.closed_form_holds = pt.estimate.ci_hi <= *pt.bound_closed_form;
    }
    if (modulus) {
      const auto it = std::lower_bound(t_sorted.begin(), t_sorted.end(), 2.0 * s);
      pt.nu_hat = modulus->nu_hat[static_cast<std::size_t>(it - t_sorted.begin())];
      pt.bound_empirical = cards * *pt.nu_hat;
    }
    res.points.push_back(std::move(pt));
  }
  std::vector<std::size_t> order(res.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return res.points[a].s < res.points[b].s; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (res.points[order[k]].estimate.successes < res.points[order[k - 1]].estimate.successes) {
      res.monotone = false;
    }
  }
  return res;
}

// --- Lifshitz --------------------------------------------------------------

LifshitzResult lifshitz_experiment(const LifshitzConfig& cfg) {
  cfg.dims.validate();
  cfg.disorder.validate();
  cfg.interaction.validate();
  if (!cfg.disorder.nonnegative()) {
    throw PreconditionError("lifshitz experiment needs a.s. nonnegative disorder (uniform(a>=0,b), "
                            "bernoulli or a nonnegative constant); " +
                            cfg.disorder.name() + " is signed");
  }
  if (cfg.L0 < 1) throw PreconditionError("lifshitz experiment needs L0 >= 1");
  if (!(cfg.C > 0.0)) throw PreconditionError("lifshitz experiment needs C > 0");
  if (cfg.trials == 0) throw PreconditionError("lifshitz experiment needs trials >= 1");
  const Cube cube(default_center(cfg.dims, cfg.center), cfg.L0);
  const auto region = projection_region(cube);
  LifshitzResult res;
  res.threshold = 2.0 * cfg.C / std::sqrt(static_cast<double>(cfg.L0));
  const auto hits = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const FieldSample field = sample_field(cfg.disorder, region, r);
    const auto H =
        assemble_hamiltonian(cube, field, cfg.interaction, serial_assembly(Storage::Sparse));
    InertiaCounter counter;
    return counter.count_at_or_below(H, res.threshold) > 0 ? 1 : 0;
  });
  std::size_t successes = 0;
  for (int h : hits) successes += static_cast<std::size_t>(h);
  res.estimate = ProbabilityEstimate::from_counts("E_0 <= 2 C L0^{-1/2}", successes, cfg.trials);
  return res;
}

// --- two-cube singularity --------------------------------------------------

SingularityResult singularity_probability(const SingularityConfig& cfg) {
  cfg.dims.validate();
  cfg.disorder.validate();
  cfg.interaction.validate();
  cfg.params.validate();
  check_site(cfg.dims, cfg.u, "center u");
  check_site(cfg.dims, cfg.v, "center v");
  if (cfg.L < 1) throw PreconditionError("NS predicates require L >= 1");
  if (cfg.dims.n > cfg.params.N) throw PreconditionError("n exceeds N");
  if (cfg.trials == 0) throw PreconditionError("singularity experiment needs trials >= 1");
  const Coord need = 2 * static_cast<Coord>(cfg.dims.n) * cfg.L;
  const Coord dist = sym_distance(cfg.u, cfg.v);
  if (dist < need) {
    throw PreconditionError("singularity cubes too close: d_S(u, v) = " + std::to_string(dist) +
                            " < 2 n L = " + std::to_string(need));
  }
  const Cube cu(cfg.u, cfg.L);
  const Cube cv(cfg.v, cfg.L);
  const std::vector<Cube> both{cu, cv};
  const auto region = projection_region(std::span<const Cube>(both));
  const bool nonneg = cfg.disorder.nonnegative();

  struct Outcome {
    bool event = false;
    bool resonant = false;
    bool clipped = false;
    std::size_t grid = 0;
  };
  const auto outcomes = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const FieldSample field = sample_field(cfg.disorder, region, r);
    const auto du = diagonalize(assemble_hamiltonian(cu, field, cfg.interaction, serial_assembly()));
    const auto dv = diagonalize(assemble_hamiltonian(cv, field, cfg.interaction, serial_assembly()));
    const double top = std::max(du.eigenvalues.maxCoeff(), dv.eigenvalues.maxCoeff());
    const double lo = nonneg ? 0.0 : std::min(du.eigenvalues.minCoeff(), dv.eigenvalues.minCoeff());
    Outcome out;
    out.clipped = cfg.params.E_star > top;
    const double hi = std::max(lo, std::min(cfg.params.E_star, top));
    const auto grid = energy_grid(lo, hi, cfg.L, cfg.grid_cap);
    out.grid = grid.size();
    const auto vu = SingularityScanner(cu, du).scan(grid, cfg.params);
    const auto vv = SingularityScanner(cv, dv).scan(grid, cfg.params);
    for (std::size_t e = 0; e < grid.size(); ++e) {
      if (!vu[e].is_ns && !vv[e].is_ns) {
        out.event = true;
        out.resonant = vu[e].resonant && vv[e].resonant;
        break;
      }
    }
    return out;
  });
  SingularityResult res;
  std::size_t successes = 0;
  for (const Outcome& o : outcomes) {
    successes += o.event ? 1 : 0;
    res.resonant_events += o.event && o.resonant ? 1 : 0;
    res.clipped = res.clipped || o.clipped;
    res.max_grid_points = std::max(res.max_grid_points, o.grid);
  }
  res.signed_lower_endpoint = !nonneg;
  res.estimate = ProbabilityEstimate::from_counts("exists E in I: both cubes (E,m)-singular",
                                                  successes, cfg.trials);
  res.ds_bound = ds_bound(cfg.L, cfg.params.p, cfg.dims.n, cfg.params.N);
  res.ds_bound_two_p = ds_bound_two_p(cfg.L, cfg.params.p);
  return res;
}

// --- eigenfunctions --------------------------------------------------------

Site center_of_localization(const Cube& cube, const Eigen::Ref<const Eigen::VectorXd>& psi) {
  if (static_cast<std::size_t>(psi.size()) != cube.cardinality()) {
    throw PreconditionError("eigenvector does not match the cube");
  }
  const double top = psi.cwiseAbs().maxCoeff();
  const double cut = top * (1.0 - 1e-12);
  std::size_t best = 0;
  Coord best_dist = std::numeric_limits<Coord>::max();
  for (std::size_t i = 0; i < static_cast<std::size_t>(psi.size()); ++i) {
    if (std::abs(psi(as_index(i))) < cut) continue;
    const Coord d = max_norm_distance(cube.site_at(i), cube.center());
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return cube.site_at(best);
}

std::vector<Site> centers_of_localization(const Cube& cube, const SpectralDecomposition& decomp) {
  if (!decomp.has_vectors()) throw PreconditionError("centers of localization need eigenvectors");
  std::vector<Site> out;
  out.reserve(decomp.dim());
  for (Eigen::Index j = 0; j < decomp.eigenvectors.cols(); ++j) {
    out.push_back(center_of_localization(cube, decomp.eigenvectors.col(j)));
  }
  return out;
}

DecayFit fit_decay(const Cube& cube, const Eigen::Ref<const Eigen::VectorXd>& psi,
                   const Site& center, Coord distance_floor, double amplitude_floor) {
  const auto sites = cube_sites(cube);
  if (static_cast<std::size_t>(psi.size()) != sites.size()) {
    throw PreconditionError("eigenvector does not match the cube");
  }
  DecayFit fit;
  fit.center = center;
  const double top = psi.cwiseAbs().maxCoeff();
  std::map<Coord, double> shells;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Coord r = sym_distance(sites[i], center);
    if (r < distance_floor) continue;
    double& m = shells[r];
    m = std::max(m, std::abs(psi(as_index(i))));
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [r, amp] : shells) {
    if (!(amp > 0.0) || amp < amplitude_floor * top) continue;
    xs.push_back(static_cast<double>(r));
    ys.push_back(std::log(amp));
    fit.pairs.emplace_back(xs.back(), ys.back());
  }
  if (xs.size() < 4) {
    fit.skipped = "fewer than 4 distinct distances";
    return fit;
  }
  const LinearFit lf = linear_regression(xs, ys);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  fit.delocalized = fit.mass() * cube.radius() < 2.0;
  return fit;
}

DecayResult eigenfunction_decay(const DecayConfig& cfg) {
  cfg.dims.validate();
  cfg.disorder.validate();
  cfg.interaction.validate();
  if (cfg.L < 3) throw PreconditionError("decay fits need L >= 3");
  if (cfg.trials == 0) throw PreconditionError("decay experiment needs trials >= 1");
  if (cfg.interval && !(cfg.interval->first <= cfg.interval->second)) {
    throw PreconditionError("decay interval needs lo <= hi");
  }
  const Cube cube(default_center(cfg.dims, cfg.center), cfg.L);
  const auto region = projection_region(cube);
  auto per_trial = parallel::map_trials(cfg.trials, cfg.workers, [&](std::size_t r) {
    const FieldSample field = sample_field(cfg.disorder, region, r);
    const auto decomp =
        diagonalize(assemble_hamiltonian(cube, field, cfg.interaction, serial_assembly()));
    std::vector<std::size_t> chosen;
    for (std::size_t j = 0; j < decomp.dim(); ++j) {
      const double E = decomp.eigenvalues(as_index(j));
      if (cfg.interval) {
        if (E >= cfg.interval->first && E <= cfg.interval->second) chosen.push_back(j);
      } else if (j < cfg.lowest) {
        chosen.push_back(j);
      }
    }
    std::vector<DecayFit> fits;
    for (std::size_t j : chosen) {
      const auto psi = decomp.eigenvectors.col(as_index(j));
      DecayFit f = fit_decay(cube, psi, center_of_localization(cube, psi), cfg.distance_floor,
                             cfg.amplitude_floor);
      f.realization = r;
      f.eigen_index = j;
      f.energy = decomp.eigenvalues(as_index(j));
      fits.push_back(std::move(f));
    }
    return fits;
  });
  DecayResult res;
  std::vector<double> masses;
  std::vector<double> r2;
  for (auto& fits : per_trial) {
    for (auto& f : fits) {
      if (f.skipped) {
        ++res.skipped;
      } else {
        ++res.fitted;
        masses.push_back(f.mass());
        r2.push_back(f.r_squared);
      }
      res.fits.push_back(std::move(f));
    }
  }
  res.median_mass = median(masses);
  res.median_r_squared = median(r2);
  return res;
}

// --- correlators -----------------------------------------------------------

namespace {

Eigen::MatrixXd abs_vectors_in(const SpectralDecomposition& decomp,
                               std::pair<double, double> interval, std::size_t& count) {
  if (!decomp.has_vectors()) throw PreconditionError("correlators need eigenvectors");
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < decomp.eigenvalues.size(); ++j) {
    const double E = decomp.eigenvalues(j);
    if (E >= interval.first && E <= interval.second) cols.push_back(j);
  }
  count = cols.size();
  Eigen::MatrixXd A(decomp.eigenvectors.rows(), as_index(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    A.col(as_index(k)) = decomp.eigenvectors.col(cols[k]).cwiseAbs();
  }
  return A;
}

}  // namespace

CorrelatorTable correlator_table(const SpectralDecomposition& decomp,
                                 std::pair<double, double> interval, std::size_t base) {
  if (base >= decomp.dim()) throw PreconditionError("correlator base site out of range");
  CorrelatorTable t;
  t.interval = interval;
  t.base = base;
  const Eigen::MatrixXd A = abs_vectors_in(decomp, interval, t.eigenvalues_in_interval);
  t.values = A * A.row(as_index(base)).transpose();
  return t;
}

Eigen::MatrixXd correlator_matrix(const SpectralDecomposition& decomp,
                                  std::pair<double, double> interval) {
  std::size_t count = 0;
  const Eigen::MatrixXd A = abs_vectors_in(decomp, interval, count);
  return A * A.transpose();
}

DynamicalMoment dynamical_moment(const Cube& cube, const SpectralDecomposition& decomp,
                                 std::pair<double, double> interval, double s,
                                 std::span<const std::size_t> K,
                                 std::optional<std::pair<double, double>> trace_C_kappa, int N) {
  if (!(s >= 0.0)) throw PreconditionError("moment order s must be nonnegative");
  if (K.empty()) throw PreconditionError("moment base region K must be nonempty");
  for (std::size_t k : K) {
    if (k >= decomp.dim()) throw PreconditionError("K must lie inside the cube");
  }
  DynamicalMoment out;
  std::size_t count = 0;
  const Eigen::MatrixXd A = abs_vectors_in(decomp, interval, count);
  out.trace_count = count;
  if (count > 0) {
    Eigen::MatrixXd AK(as_index(K.size()), A.cols());
    for (std::size_t i = 0; i < K.size(); ++i) AK.row(as_index(i)) = A.row(as_index(K[i]));
    const Eigen::MatrixXd QK = A * AK.transpose();  // Q_I(x, y) for y in K
    for (Eigen::Index x = 0; x < QK.rows(); ++x) {
      const double r = static_cast<double>(
          max_norm_distance(cube.site_at(static_cast<std::size_t>(x)), cube.center()));
      out.moment += std::pow(r, s) * QK.row(x).maxCoeff();
    }
  }
  if (trace_C_kappa) {
    const auto [C, kappa] = *trace_C_kappa;
    const double need =
        C * std::pow(static_cast<double>(cube.radius()), kappa * N * cube.d());
    out.trace_event = static_cast<double>(count) >= need;
  }
  return out;
}

}  // namespace mpa
