#pragma once

// Monte Carlo experiments over disorder realizations. Every trial draws its
// field from the counter-based generator keyed on the trial index, so results
// are independent of the worker count.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpa/disorder.hpp"
#include "mpa/geometry.hpp"
#include "mpa/model.hpp"
#include "mpa/msa.hpp"
#include "mpa/spectral.hpp"

namespace mpa {

// --- statistics ------------------------------------------------------------

struct ProbabilityEstimate {
  std::string event_name;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;

  static ProbabilityEstimate from_counts(std::string name, std::size_t successes,
                                         std::size_t trials, double confidence = 0.95);
};

/// Exact binomial (Clopper-Pearson) interval.
std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials,
                                          double confidence = 0.95);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);
/// Asymptotic 1% critical value 1.628 sqrt((n+m)/(nm)).
double ks_critical_1pct(std::size_t n, std::size_t m);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept.
LinearFit linear_regression(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> v);

// --- Wegner ----------------------------------------------------------------

struct WegnerConfig {
  Dims dims;
  int L1 = 2;
  int L2 = 2;
  Site u;
  Site v;
  DisorderSpec disorder;
  InteractionSpec interaction;
  std::vector<double> s_grid{0.005, 0.01, 0.02, 0.05};
  std::size_t trials = 10'000;
  std::size_t modulus_trials = 10'000;  // 0 skips the empirical modulus
  int workers = 1;
};

struct WegnerPoint {
  double s = 0.0;
  ProbabilityEstimate estimate;
  std::optional<double> bound_closed_form;  // gaussian only: |C1||C2| 2s sqrt|Q| / (sigma sqrt(2 pi))
  std::optional<double> nu_hat;             // empirical modulus at 2s
  std::optional<double> bound_empirical;    // |C1||C2| nu_hat(2s)
  bool closed_form_holds = true;            // upper CI <= closed-form bound
};

struct WegnerResult {
  std::vector<WegnerPoint> points;
  std::size_t card1 = 0;
  std::size_t card2 = 0;
  std::size_t region_size = 0;        // |Q|, the projection of the first cube
  bool monotone = true;               // successes nondecreasing in s
  std::size_t zero_distance_events = 0;
  std::vector<double> min_distances;  // per trial
};

WegnerResult wegner_experiment(const WegnerConfig& cfg);

// --- Lifshitz tail ---------------------------------------------------------

struct LifshitzConfig {
  Dims dims;
  int L0 = 4;
  std::optional<Site> center;  // origin by default
  DisorderSpec disorder;
  InteractionSpec interaction;
  double C = 1.0;
  std::size_t trials = 10'000;
  int workers = 1;
};

struct LifshitzResult {
  ProbabilityEstimate estimate;
  double threshold = 0.0;  // 2 C L0^{-1/2}
};

/// P{ E_0 <= 2 C L0^{-1/2} } for E_0 the bottom of the spectrum on C_{L0}(u).
LifshitzResult lifshitz_experiment(const LifshitzConfig& cfg);

// --- two-cube singularity --------------------------------------------------

struct SingularityConfig {
  Dims dims;
  int L = 3;
  Site u;
  Site v;
  DisorderSpec disorder;
  InteractionSpec interaction;
  MsaParams params;
  std::size_t trials = 100;
  std::size_t grid_cap = 200'000;
  int workers = 1;
};

struct SingularityResult {
  ProbabilityEstimate estimate;
  double ds_bound = 0.0;        // L^{-p 2^{N-n+1}}
  double ds_bound_two_p = 0.0;  // L^{-2p}
  bool clipped = false;         // E* exceeded the realized spectrum in some trial
  bool signed_lower_endpoint = false;  // lower end taken from the realized spectrum
  std::size_t resonant_events = 0;     // events decided by resonance in both cubes
  std::size_t max_grid_points = 0;
};

/// P{ exists E in I : C_L(u) and C_L(v) are both (E,m)-singular }.
SingularityResult singularity_probability(const SingularityConfig& cfg);

// --- eigenfunctions --------------------------------------------------------

/// Argmax of |psi|; near-ties (1e-12 relative) go to the site nearest the cube
/// center, then to the lexicographically smallest.
Site center_of_localization(const Cube& cube, const Eigen::Ref<const Eigen::VectorXd>& psi);
std::vector<Site> centers_of_localization(const Cube& cube, const SpectralDecomposition& decomp);

struct DecayFit {
  std::size_t realization = 0;
  std::size_t eigen_index = 0;
  double energy = 0.0;
  Site center;
  std::vector<std::pair<double, double>> pairs;  // (distance, log max amplitude on that shell)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool delocalized = false;  // fitted mass times cube radius below 2
  std::optional<std::string> skipped;

  double mass() const { return -slope; }
};

/// Regresses the shell maxima of log|psi| on the symmetrized distance from
/// `center`, over distances >= distance_floor and amplitudes >= amplitude_floor * max|psi|.
DecayFit fit_decay(const Cube& cube, const Eigen::Ref<const Eigen::VectorXd>& psi,
                   const Site& center, Coord distance_floor = 1, double amplitude_floor = 1e-12);

struct DecayConfig {
  Dims dims;
  int L = 6;
  std::optional<Site> center;
  DisorderSpec disorder;
  InteractionSpec interaction;
  std::optional<std::pair<double, double>> interval;  // eigenpairs with E in I ...
  std::size_t lowest = 5;                             // ... or the lowest k when no interval
  std::size_t trials = 100;
  Coord distance_floor = 1;
  double amplitude_floor = 1e-12;
  int workers = 1;
};

struct DecayResult {
  std::vector<DecayFit> fits;
  std::size_t fitted = 0;
  std::size_t skipped = 0;
  double median_mass = 0.0;
  double median_r_squared = 0.0;
};

DecayResult eigenfunction_decay(const DecayConfig& cfg);

// --- correlators -----------------------------------------------------------

struct CorrelatorTable {
  std::pair<double, double> interval;
  std::size_t base = 0;          // site index
  Eigen::VectorXd values;        // Q_I(x, base) per site index
  std::size_t eigenvalues_in_interval = 0;
};

/// Q_I(x, base) = sum over E_j in I of |psi_j(x)| |psi_j(base)|, I closed.
CorrelatorTable correlator_table(const SpectralDecomposition& decomp,
                                 std::pair<double, double> interval, std::size_t base);

/// Full Q_I(x, y) matrix.
Eigen::MatrixXd correlator_matrix(const SpectralDecomposition& decomp,
                                  std::pair<double, double> interval);

struct DynamicalMoment {
  double moment = 0.0;          // sum_x |x|^s max_{y in K} Q_I(x, y)
  std::size_t trace_count = 0;  // #{E_j in I}
  std::optional<bool> trace_event;  // trace_count >= C L^{kappa N d} when requested
};

/// |x| is the max-norm distance from the cube center.
DynamicalMoment dynamical_moment(const Cube& cube, const SpectralDecomposition& decomp,
                                 std::pair<double, double> interval, double s,
                                 std::span<const std::size_t> K,
                                 std::optional<std::pair<double, double>> trace_C_kappa = {},
                                 int N = 1);

}  // namespace mpa
