// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "mpa/config.hpp"
#include "mpa/ensemble.hpp"
#include "mpa/format.hpp"
#include "mpa/msa.hpp"
#include "mpa/parallel.hpp"
#include "mpa/runner.hpp"
#include "mpa/spectral.hpp"

using namespace mpa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

DiagonalizeOptions values_only() {
  DiagonalizeOptions o;
  o.vectors = false;
  return o;
}

FieldSample field_for(const Cube& c, const DisorderSpec& spec, std::uint64_t r) {
  return sample_field(spec, projection_region(c), r);
}

/// Random (d, n, L) with (2L+1)^{nd} at most `max_dim`.
struct Shape {
  int d, n, L;
};
Shape random_shape(std::mt19937_64& rng, int L_max, std::size_t max_dim) {
  for (;;) {
    const int d = std::uniform_int_distribution<int>(1, 2)(rng);
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    const int L = std::uniform_int_distribution<int>(1, L_max)(rng);
    if (std::pow(2.0 * L + 1, n * d) <= static_cast<double>(max_dim)) return {d, n, L};
  }
}

DisorderSpec random_law(std::mt19937_64& rng) {
  const auto seed = rng();
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: return {Gaussian{0.0, 2.0}, seed};
    case 1: return {Uniform{0.0, 5.0}, seed};
    default: return {Bernoulli{0.3, 4.0}, seed};
  }
}

InteractionSpec random_interaction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  return InteractionSpec{1, {u(rng), u(rng)}};
}

// 1. free spectra against the sumset of one-particle eigenvalues
Outcome tensor_spectrum() {
  double worst = 0.0;
  for (int n = 1; n <= 3; ++n) {
    for (int L = 1; L <= 3; ++L) {
      std::vector<double> one;
      for (int j = 1; j <= 2 * L + 1; ++j) one.push_back(2.0 - 2.0 * std::cos(j * M_PI / (2.0 * L + 2.0)));
      std::vector<double> sums{0.0};
      for (int p = 0; p < n; ++p) {
        std::vector<double> next;
        for (double a : sums) {
          for (double b : one) next.push_back(a + b);
        }
        sums = std::move(next);
      }
      std::sort(sums.begin(), sums.end());
      const Cube c(Site::origin(1, n), L);
      FieldSample zero(projection_region(c), std::vector<double>(2 * L + 1, 0.0));
      const auto ev = diagonalize(assemble_hamiltonian(c, zero, InteractionSpec::none()), values_only())
                          .eigenvalues;
      if (static_cast<std::size_t>(ev.size()) != sums.size()) return {false, "dimension mismatch"};
      for (std::size_t i = 0; i < sums.size(); ++i) {
        worst = std::max(worst, std::abs(ev(static_cast<Eigen::Index>(i)) - sums[i]));
      }
    }
  }
  return {worst <= 1e-9, "max elementwise error " + g(worst) + " over n,L in {1,2,3}"};
}

// 2. nonnegative potentials keep the spectrum above 0; the free operator sits in [0, 4nd]
Outcome spectrum_bottom() {
  const Cube c(Site::origin(1, 2), 3);
  const DisorderSpec spec{Uniform{0.0, 3.0}, 2024};
  const InteractionSpec phi{1, {1.0, 0.5}};
  const auto mins = parallel::map_trials(1000, parallel::available_workers(), [&](std::size_t r) {
    return diagonalize(assemble_hamiltonian(c, field_for(c, spec, r), phi), values_only())
        .eigenvalues.minCoeff();
  });
  std::size_t ok = 0;
  double lowest = mins[0];
  for (double m : mins) {
    ok += m >= -1e-10 ? 1 : 0;
    lowest = std::min(lowest, m);
  }
  bool free_ok = true;
  for (int d = 1; d <= 2; ++d) {
    for (int n = 1; n <= 2; ++n) {
      for (int L = 1; L <= 3; ++L) {
        const auto ev = diagonalize(assemble_laplacian(Cube(Site::origin(d, n), L)), values_only()).eigenvalues;
        free_ok = free_ok && ev.minCoeff() >= -1e-10 && ev.maxCoeff() <= 4.0 * n * d + 1e-10;
      }
    }
  }
  return {ok == 1000 && free_ok, std::to_string(ok) + "/1000 trials with min eigenvalue >= -1e-10 (lowest " +
                                     g(lowest) + "); free spectra in [0, 4nd]: " +
                                     (free_ok ? "yes" : "no")};
}

// 3. Combes-Thomas decay bound on random instances
Outcome combes_thomas() {
  std::mt19937_64 rng(3);
  std::size_t held = 0;
  double worst = 0.0, worst_l1 = 0.0;
  for (int i = 0; i < 200; ++i) {
    Shape s = random_shape(rng, 4, 729);
    if (s.n * s.d == 4) s.L = std::min(s.L, 2);
    const Cube c(Site::origin(s.d, s.n), s.L);
    const auto spec = random_law(rng);
    const auto H = assemble_hamiltonian(c, field_for(c, spec, 0), random_interaction(rng));
    const auto ev = diagonalize(H, values_only()).eigenvalues;
    std::uniform_real_distribution<double> Ed(ev.minCoeff() - 1.0, ev.maxCoeff() + 1.0);
    double E = Ed(rng);
    while (dist_to_spectrum(ev, E) < 1e-6) E = Ed(rng);
    const double eta = std::min(1.0, dist_to_spectrum(ev, E)) * (1.0 - 1e-6);
    const auto rep = combes_thomas_check(H, E, eta, parallel::available_workers());
    held += rep.holds ? 1 : 0;
    worst = std::max(worst, rep.worst_ratio);
    worst_l1 = std::max(worst_l1, rep.worst_ratio_l1);
  }
  return {held == 200, std::to_string(held) + "/200 instances hold; worst ratio " + g(worst) +
                           " (max-norm), " + g(worst_l1) + " (l1 distance)"};
}

// 4. (H - E) G = I and the geometric resolvent identity
Outcome resolvent_identities() {
  std::mt19937_64 rng(4);
  double worst_inv = 0.0, worst_gri = 0.0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    Shape s = random_shape(rng, 4, 729);
    s.L = std::max(s.L, 2);
    if (s.n * s.d == 4) s.L = 2;
    const Cube big(Site::origin(s.d, s.n), s.L);
    const int Ls = std::uniform_int_distribution<int>(0, s.L - 1)(rng);
    const auto centers = subcube_centers(big, Ls);
    const Cube sub(centers[std::uniform_int_distribution<std::size_t>(0, centers.size() - 1)(rng)], Ls);
    const auto spec = random_law(rng);
    const auto phi = random_interaction(rng);
    const auto field = field_for(big, spec, 0);
    const auto Hb = assemble_hamiltonian(big, field, phi);
    const auto Hs = assemble_hamiltonian(sub, field, phi);
    const auto ev_b = diagonalize(Hb, values_only()).eigenvalues;
    const auto ev_s = diagonalize(Hs, values_only()).eigenvalues;
    std::uniform_real_distribution<double> Ed(ev_b.minCoeff() - 1.0, ev_b.maxCoeff() + 1.0);
    double E = Ed(rng);
    while (std::min(dist_to_spectrum(ev_b, E), dist_to_spectrum(ev_s, E)) < 1e-3) E = Ed(rng);

    const Eigen::MatrixXd inv = GreenSolver(Hb, E).inverse();
    const auto dim = static_cast<Eigen::Index>(Hb.dim());
    const Eigen::MatrixXd A = Hb.to_dense() - E * Eigen::MatrixXd::Identity(dim, dim);
    worst_inv = std::max(worst_inv, (A * inv - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff());

    const auto sub_sites = cube_sites(sub);
    std::vector<Site> outside;
    for (const auto& y : cube_sites(big)) {
      if (!sub.contains(y)) outside.push_back(y);
    }
    const Site& x = sub_sites[std::uniform_int_distribution<std::size_t>(0, sub_sites.size() - 1)(rng)];
    const Site& y = outside[std::uniform_int_distribution<std::size_t>(0, outside.size() - 1)(rng)];
    const auto rep = verify_gri(Hb, Hs, E, x, y);
    const double rel = rep.residual / (1.0 + std::abs(rep.lhs));
    worst_gri = std::max(worst_gri, rel);
    ok = ok && rel <= 1e-8;
  }
  ok = ok && worst_inv <= 1e-8;
  return {ok, "max |(H-E)G - I| " + g(worst_inv) + ", max GRI residual / (1 + |G|) " + g(worst_gri) +
                  " over 100 configurations"};
}

// 5. Wegner-type two-cube bound with the gaussian closed-form modulus
Outcome wegner() {
  WegnerConfig cfg;
  cfg.dims = Dims{1, 1, 1};
  cfg.L1 = cfg.L2 = 2;
  cfg.u = Site(1, {0});
  cfg.v = Site(1, {10});
  cfg.disorder = DisorderSpec{Gaussian{0.0, 1.0}, 5};
  cfg.trials = 10'000;
  cfg.modulus_trials = 10'000;
  cfg.workers = parallel::available_workers();
  const auto res = wegner_experiment(cfg);
  bool ok = res.monotone;
  std::string detail = std::string("monotone ") + (res.monotone ? "yes" : "no");
  for (const auto& p : res.points) {
    ok = ok && p.bound_closed_form && p.estimate.ci_hi <= *p.bound_closed_form;
    detail += "; s=" + g(p.s) + ": CI_hi " + g(p.estimate.ci_hi) + " <= " + g(p.bound_closed_form.value_or(NAN));
  }
  return {ok, detail};
}

// 6. Lifshitz-tail trend in L0
Outcome lifshitz() {
  bool ok = true;
  std::string detail;
  for (int n = 1; n <= 2; ++n) {
    std::vector<ProbabilityEstimate> est;
    for (int L0 : {4, 9, 16, 25}) {
      LifshitzConfig cfg;
      cfg.dims = Dims{1, n, n};
      cfg.L0 = L0;
      cfg.disorder = DisorderSpec{Uniform{0.0, 1.0}, 6};
      cfg.C = 1.0;
      cfg.trials = 10'000;
      cfg.workers = parallel::available_workers();
      est.push_back(lifshitz_experiment(cfg).estimate);
    }
    bool strict = true;
    for (std::size_t i = 1; i < est.size(); ++i) strict = strict && est[i].p_hat < est[i - 1].p_hat;
    const bool separated = est.back().ci_hi < est.front().ci_lo;
    ok = ok && strict && separated;
    detail += (n == 1 ? "" : "; ") + std::string("n=") + std::to_string(n) + ": p_hat";
    for (const auto& e : est) detail += " " + g(e.p_hat);
    detail += std::string(strict ? " strictly decreasing" : " NOT strictly decreasing") +
              (separated ? ", endpoint CIs disjoint" : ", endpoint CIs overlap");
  }
  return {ok, detail};
}

// 7. MSA predicate arithmetic and monotonicity
Outcome msa_coherence() {
  const bool gamma_ok = gamma(0.5, 16, 2, 2) == 0.75 && gamma(0.5, 16, 1, 2) == 1.125;
  const ScaleSequence seq(3);
  const bool scales_ok = seq.at(1) == 6 && seq.at(2) == 15 && seq.at(3) == 59;
  std::mt19937_64 rng(7);
  std::size_t violations = 0;
  const double ms[] = {0.01, 0.1, 0.3, 1.0, 3.0};
  for (int i = 0; i < 100; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    const int L = std::uniform_int_distribution<int>(1, 4)(rng);
    const Cube c(Site::origin(1, n), L);
    const auto H = assemble_hamiltonian(c, field_for(c, random_law(rng), 0), random_interaction(rng));
    const auto dec = diagonalize(H);
    std::uniform_real_distribution<double> Ed(dec.eigenvalues.minCoeff() - 0.5, dec.eigenvalues.maxCoeff() + 0.5);
    const double E = Ed(rng);
    bool singular_seen = false;
    for (double m : ms) {
      MsaParams p;
      p.m = m;
      p.N = 2;
      const bool ns = is_ns(H, dec, E, p).is_ns;
      if (singular_seen && ns) ++violations;
      singular_seen = singular_seen || !ns;
    }
  }
  return {gamma_ok && scales_ok && violations == 0,
          std::string("gamma 0.75/1.125 exact: ") + (gamma_ok ? "yes" : "no") + "; scales 3,6,15,59: " +
              (scales_ok ? "yes" : "no") + "; monotonicity violations in m: " + std::to_string(violations) +
              "/100 instances"};
}

// 8. radial descent for the extremal subharmonic profile
Outcome subharmonic() {
  bool ok = true;
  double tight = 1.0;
  for (int L : {20, 50}) {
    for (int ell : {2, 5}) {
      for (double q : {0.3, 0.7}) {
        const Cube c(Site(1, {0}), L);
        std::vector<double> f;
        for (const auto& x : cube_sites(c)) f.push_back(std::pow(q, static_cast<double>(L - std::abs(x[0])) / ell));
        const auto rep = verify_subharmonic_descent(c, f, ell, q, {}, 1.0);
        // the floor in the exponent loses at most two powers of q
        const double ratio = rep.center_value / rep.center_bound;
        tight = std::min(tight, ratio);
        ok = ok && rep.subharmonic && rep.conclusion_holds && !rep.degenerate && ratio <= 1.0 &&
             ratio >= q * q * (1.0 - 1e-12);
      }
    }
  }
  return {ok, "8 profiles subharmonic and within the descent bound; smallest f(0)/bound " + g(tight)};
}

// 9. eigenfunction correlators dominate f(H) kernels
Outcome correlators() {
  std::mt19937_64 rng(9);
  std::size_t violations = 0;
  double worst_diag = 0.0, worst_excess = -1.0;
  for (int i = 0; i < 50; ++i) {
    Shape s = random_shape(rng, 20, 200);
    const Cube c(Site::origin(s.d, s.n), s.L);
    const auto H = assemble_hamiltonian(c, field_for(c, random_law(rng), 0), random_interaction(rng));
    const auto dec = diagonalize(H);
    const std::size_t base = c.index_of(c.center());
    const std::pair<double, double> all{dec.eigenvalues.minCoeff() - 1.0, dec.eigenvalues.maxCoeff() + 1.0};
    const Eigen::MatrixXd Q = correlator_matrix(dec, all);
    worst_diag = std::max(worst_diag, (Q.diagonal().array() - 1.0).abs().maxCoeff());
    const Eigen::MatrixXd Hd = H.to_dense();
    for (double tau : {1.0, 10.0}) {
      const Eigen::MatrixXd A = tau * Hd;
      for (const Eigen::MatrixXd& F : {Eigen::MatrixXd(A.cos()), Eigen::MatrixXd(A.sin())}) {
        for (Eigen::Index x = 0; x < F.rows(); ++x) {
          const double lhs = std::abs(F(x, static_cast<Eigen::Index>(base)));
          const double rhs = Q(x, static_cast<Eigen::Index>(base));
          worst_excess = std::max(worst_excess, lhs - rhs);
          if (lhs > rhs + 1e-9) ++violations;
        }
      }
    }
  }
  return {violations == 0 && worst_diag <= 1e-9,
          std::to_string(violations) + " violations; max |f(H)(x,0)| - Q(x,0) = " + g(worst_excess) +
              "; max |Q(x,x) - 1| = " + g(worst_diag)};
}

// 10. fitted decay rate grows with disorder strength
Outcome localization_trend() {
  std::vector<double> masses;
  double r2_50 = 0.0;
  for (double b : {1.0, 10.0, 50.0}) {
    DecayConfig cfg;
    cfg.dims = Dims{1, 2, 2};
    cfg.L = 6;
    cfg.disorder = DisorderSpec{Uniform{0.0, b}, 10};
    cfg.lowest = 5;
    cfg.trials = 100;
    cfg.workers = parallel::available_workers();
    const auto res = eigenfunction_decay(cfg);
    masses.push_back(res.median_mass);
    r2_50 = res.median_r_squared;
  }
  const bool ok = masses[0] < masses[1] && masses[1] < masses[2] && masses[2] > 0.5 && r2_50 > 0.8;
  return {ok, "median mass " + g(masses[0]) + " < " + g(masses[1]) + " < " + g(masses[2]) +
                  "; median r^2 at b=50 " + g(r2_50)};
}

// 11. identical configs give byte-identical CSVs
Outcome determinism() {
  const std::vector<std::string> configs{
      "experiment = spectrum\nd = 1\nn = 2\nL = 3\nseed = 11\ntrials = 20\n",
      "experiment = wegner\nd = 1\nn = 1\nseed = 11\ntrials = 2000\nwegner.modulus_trials = 1000\n",
      "experiment = msa-scan\nd = 1\nn = 2\nN = 2\nL = 2\nseed = 11\ntrials = 10\n"
      "disorder.law = uniform\ndisorder.b = 10\nmsa.m = 0.3\nmsa.E_star = 12\n",
      "experiment = decay\nd = 1\nn = 2\nL = 6\nseed = 11\ntrials = 10\n"
      "disorder.law = uniform\ndisorder.b = 10\n",
      "experiment = green\nd = 2\nn = 1\nL = 3\nseed = 11\ntrials = 3\n",
  };
  const auto root = std::filesystem::temp_directory_path() / "mpa_acceptance_determinism";
  std::size_t identical = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string csv[2];
    for (int k = 0; k < 2; ++k) {
      auto cfg = parse_config(configs[i]);
      cfg.out = (root / (std::to_string(i) + "_" + std::to_string(k))).string();
      cfg.workers = k == 0 ? 1 : std::max(2, parallel::available_workers());
      if (run(cfg).status != 0) return {false, "run failed for config " + std::to_string(i)};
      std::ifstream in(std::filesystem::path(cfg.out) / "results.csv", std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      csv[k] = ss.str();
    }
    identical += (!csv[0].empty() && csv[0] == csv[1]) ? 1 : 0;
  }
  std::filesystem::remove_all(root);
  return {identical == configs.size(), std::to_string(identical) + "/" + std::to_string(configs.size()) +
                                           " experiments byte-identical across reruns (1 vs many workers)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"tensor spectrum oracle", tensor_spectrum},
      {"spectrum bottom", spectrum_bottom},
      {"Combes-Thomas bound", combes_thomas},
      {"resolvent identities", resolvent_identities},
      {"Wegner two-cube bound", wegner},
      {"Lifshitz trend", lifshitz},
      {"MSA predicate coherence", msa_coherence},
      {"subharmonic descent", subharmonic},
      {"correlator dominance", correlators},
      {"localization trend", localization_trend},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " AC" << (i + 1 < 10 ? "0" : "") << i + 1 << " "
              << criteria[i].first << ": " << o.detail << " [" << g(secs) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
