#pragma once

// Single-particle random fields V(x, omega), their sample-mean / fluctuation
// split over a region Q, and an empirical estimate of the modulus of
// continuity of the sample-mean distribution function.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mpa/geometry.hpp"

namespace mpa {

struct Gaussian {
  double mean = 0.0;
  double stdev = 1.0;
};
struct Uniform {
  double a = 0.0;
  double b = 1.0;
};
/// Takes value w with probability p, else 0.
struct Bernoulli {
  double p = 0.5;
  double w = 1.0;
};
/// Deterministic V = value everywhere; V = 0 is the free operator.
struct Constant {
  double value = 0.0;
};

using Distribution = std::variant<Gaussian, Uniform, Bernoulli, Constant>;

struct DisorderSpec {
  Distribution law = Gaussian{};
  std::uint64_t seed = 0;

  void validate() const;
  std::string name() const;
  /// True when every draw is >= 0 almost surely.
  bool nonnegative() const;
  /// True for laws with a bounded density (gaussian, uniform).
  bool continuous() const;
  /// Upper bound on draws used for a-priori spectral ranges (mean + 6 sd for gaussian).
  double practical_upper() const;
  double practical_lower() const;
};

/// Counter-based uniform in (0,1) keyed on (seed, realization, site, stream).
/// Independent of enumeration order, so overlapping regions see identical values.
double keyed_uniform(std::uint64_t seed, std::uint64_t realization, const Site& site,
                     std::uint64_t stream);

/// Counter-based standard normal (Box-Muller on two keyed uniforms).
double keyed_normal(std::uint64_t seed, std::uint64_t realization, const Site& site,
                    std::uint64_t stream);

/// One draw of V at a single-particle site.
double draw_site(const DisorderSpec& spec, std::uint64_t realization, const Site& site);

/// A realization of V on a finite single-particle region Q.
class FieldSample {
 public:
  FieldSample(std::vector<Site> region, std::vector<double> values,
              std::uint64_t realization = 0);

  const std::vector<Site>& region() const { return region_; }
  const std::vector<double>& values() const { return values_; }
  std::uint64_t realization() const { return realization_; }
  std::size_t size() const { return region_.size(); }

  bool covers(const Site& x) const { return index_.count(x) != 0; }
  /// V(x); throws PreconditionError when x is outside the region.
  double at(const Site& x) const;

 private:
  std::vector<Site> region_;
  std::vector<double> values_;
  std::unordered_map<Site, std::size_t, SiteHash> index_;
  std::uint64_t realization_ = 0;
};

/// Sites of a single-particle cube, lexicographic.
std::vector<Site> region_of(const Cube& single_particle_cube);

/// Union of the single-particle projections C_L(u_i) of the given cubes, lexicographic.
std::vector<Site> projection_region(std::span<const Cube> cubes);
std::vector<Site> projection_region(const Cube& cube);

FieldSample sample_field(const DisorderSpec& spec, std::vector<Site> region,
                         std::uint64_t realization);

struct MeanFluctDecomposition {
  double mean = 0.0;           // xi_Q
  std::vector<double> fluct;   // eta_x, in region order
};

MeanFluctDecomposition decompose(const FieldSample& field);

/// Keeps the fluctuations and replaces xi_Q by a fresh Normal(mu, sigma^2/|Q|)
/// draw. Only defined for gaussian disorder, where xi_Q is independent of eta.
FieldSample resample_mean_conditional(const FieldSample& field, const DisorderSpec& spec,
                                      std::uint64_t new_draw_index);

struct ModulusEstimate {
  std::vector<double> t_grid;
  std::vector<double> nu_hat;   // isotonic, in [0,1]
  std::vector<double> raw;      // before isotonic cleanup
  std::size_t trials = 0;
  /// 95% DKW band on the empirical CDF; window masses are accurate to 2x this.
  double dkw_halfwidth = 0.0;
};

/// sup_s P_hat{ xi_Q in [s, s+t] } over the empirical law of the sample mean,
/// with nu_hat(0) = 0. Realizations 0..trials-1 of `spec` are used.
ModulusEstimate estimate_modulus(const DisorderSpec& spec, const std::vector<Site>& region,
                                 std::span<const double> t_grid, std::size_t trials,
                                 int workers = 1);

/// Same estimator on an already drawn sample of means.
ModulusEstimate modulus_from_means(std::vector<double> means, std::span<const double> t_grid);

/// Pool-adjacent-violators fit of a nondecreasing sequence (equal weights).
std::vector<double> isotonic_increasing(std::span<const double> values);

/// Closed-form bound t * sqrt(|Q|) / (sigma * sqrt(2 pi)) for gaussian laws.
double gaussian_mean_modulus(double t, std::size_t region_size, double stdev);

}  // namespace mpa
