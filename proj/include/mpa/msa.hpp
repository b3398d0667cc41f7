#pragma once

// Multi-scale predicates on cube Hamiltonians: (E,m)-non-singularity,
// E-resonance, tunnelling, counting of separated singular sub-cubes, the
// initial-scale constants and the radial (subharmonic) descent bound.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpa/disorder.hpp"
#include "mpa/geometry.hpp"
#include "mpa/model.hpp"
#include "mpa/spectral.hpp"

namespace mpa {

/// Inner exponent of gamma: (1 + L^{-1/4}) by default, (1 + L^{-1/8}) optionally.
enum class GammaExponent { Quarter, Eighth };

std::string to_string(GammaExponent g);
GammaExponent parse_gamma_exponent(const std::string& s);

struct MsaParams {
  static constexpr double alpha = 1.5;
  static constexpr double beta = 0.5;

  double p = 1.0;
  double m = 1.0;
  std::int64_t L0 = 3;
  double E_star = 1.0;
  int N = 1;
  GammaExponent gamma_exponent = GammaExponent::Quarter;

  void validate() const;
};

/// gamma(m, L, n) = m (1 + L^{-1/4})^{N-n+1}.
double gamma(double m, std::int64_t L, int n, int N,
             GammaExponent e = GammaExponent::Quarter);

struct InitialConstants {
  double m = 0.0;       // (14 N^N + 6 N d) / sqrt(L0)
  double E_star = 0.0;  // 12 N d 2^{N+1} m
  double C = 0.0;       // 12 N d 2^{N+1} (14 N^N + 6 N d)
};

InitialConstants initial_constants(int N, int d, std::int64_t L0);

/// e^{-L^{1/2}}, the resonance window at scale L.
double resonance_width(std::int64_t L);

/// dist(E, sigma) <= e^{-sqrt(L)}.
bool is_resonant(const Eigen::VectorXd& eigenvalues, double E, std::int64_t L);
inline bool is_resonant(const SpectralDecomposition& decomp, double E, std::int64_t L) {
  return is_resonant(decomp.eigenvalues, E, L);
}

/// floor(L^{1/alpha}) = floor(L^{2/3}).
std::int64_t core_radius(std::int64_t L);

/// L^{-p 2^{N-n+1}}.
double ds_bound(std::int64_t L, double p, int n, int N);
/// L^{-2p}, the exponent used in the pair-probability lemmas.
double ds_bound_two_p(std::int64_t L, double p);

struct SingularityVerdict {
  Cube cube;
  double energy = 0.0;
  bool is_ns = false;
  bool resonant = false;              // resonant cubes are reported Singular
  std::optional<double> observed_max; // absent when the resonance path decided
  double threshold = 0.0;             // e^{-gamma L}

  nlohmann::json to_json() const;
};

/// Precomputes psi_j(x) psi_j(y) for x in the core and y on the internal
/// boundary, so a sweep over energies is one matrix product.
class SingularityScanner {
 public:
  SingularityScanner(const Cube& cube, const SpectralDecomposition& decomp);

  const Cube& cube() const { return cube_; }
  std::size_t core_size() const { return core_.size(); }
  std::size_t boundary_size() const { return boundary_.size(); }

  /// max over core x, boundary y of |G(x, y; E)|; E must not be an eigenvalue.
  double observed_max(double E) const;
  SingularityVerdict verdict(double E, const MsaParams& params) const;
  std::vector<SingularityVerdict> scan(std::span<const double> energies,
                                       const MsaParams& params) const;

 private:
  Cube cube_;
  Eigen::VectorXd eigenvalues_;
  std::vector<std::size_t> core_;
  std::vector<std::size_t> boundary_;
  Eigen::MatrixXd products_;  // (core*boundary) x dim
};

/// (E,m)-NS test of a cube. Requires L >= 1 and a decomposition with vectors.
SingularityVerdict is_ns(const HamiltonianMatrix& H, const SpectralDecomposition& decomp, double E,
                         const MsaParams& params);

/// lo, lo + dE, ..., hi with dE = e^{-sqrt(L)} / 4. Throws CapacityError past `cap` points.
std::vector<double> energy_grid(double lo, double hi, std::int64_t L, std::size_t cap = 200'000);

/// Centers w with C_{L_sub}(w) inside the cube, lexicographic.
std::vector<Site> subcube_centers(const Cube& big, int L_sub);

struct SeparatedFamily {
  std::size_t count = 0;
  bool exact = true;               // false once the exact search hits its cap
  std::vector<std::size_t> members;  // indices into the candidate list
};

/// Largest family of candidates with pairwise symmetrized distance >= separation.
/// Greedy packing, refined by exhaustive search while the answer is at most 4.
SeparatedFamily max_separated_family(std::span<const Site> centers, Coord separation);

enum class CubeKind { PI, FI };

/// Every sub-cube of radius L_sub together with its spectrum, built once per field.
class SubcubeAtlas {
 public:
  SubcubeAtlas(const Cube& big, int L_sub, const FieldSample& field,
               const InteractionSpec& interaction, const AssemblyOptions& opts = {});

  int sub_radius() const { return L_sub_; }
  const std::vector<Site>& centers() const { return centers_; }
  const SingularityScanner& scanner(std::size_t i) const { return scanners_[i]; }
  bool partially_interactive(std::size_t i) const { return pi_[i]; }
  const SpectralDecomposition& decomposition(std::size_t i) const { return decomps_[i]; }

  /// Sub-cube i is (E,m)-singular or E-resonant.
  bool singular(std::size_t i, double E, const MsaParams& params) const;

 private:
  int L_sub_;
  std::vector<Site> centers_;
  std::vector<SpectralDecomposition> decomps_;
  std::vector<SingularityScanner> scanners_;
  std::vector<bool> pi_;
};

/// M^{PI} / M^{FI}: size of the largest 2 N L_sub-separated family of singular
/// sub-cubes of the requested kind at energy E.
SeparatedFamily count_singular_cubes(const SubcubeAtlas& atlas, double E, CubeKind kind,
                                     const MsaParams& params);
SeparatedFamily count_singular_cubes(const Cube& big, const FieldSample& field, double E,
                                     CubeKind kind, int L_sub, const MsaParams& params,
                                     const InteractionSpec& interaction);

struct TunnellingReport {
  bool tunnelling = false;
  std::optional<double> energy;
  std::optional<std::pair<std::size_t, std::size_t>> witness;  // indices into atlas centers
};

/// Some grid energy admits two singular sub-cubes at symmetrized distance >= 2 N L_sub.
TunnellingReport is_tunnelling(const SubcubeAtlas& atlas, std::span<const double> energies,
                               const MsaParams& params);
TunnellingReport is_tunnelling(const Cube& big, const FieldSample& field,
                               std::span<const double> energies, int L_sub,
                               const MsaParams& params, const InteractionSpec& interaction);

/// q^{floor((L - W_A)/ell) - 1}.
double subharmonic_descent_bound(std::int64_t L, std::int64_t ell, double q, std::int64_t W_A);
/// q^{floor((L - r - W_A)/ell) - 1}.
double subharmonic_descent_bound(std::int64_t L, std::int64_t ell, double q, std::int64_t W_A,
                                 std::int64_t r);

struct SubharmonicReport {
  bool subharmonic = true;
  std::optional<Site> definition_violation;
  std::vector<Annulus> cover;
  std::int64_t cover_width = 0;
  bool degenerate = false;  // cover reaches the center or the exponent is <= 0
  std::string note;
  bool conclusion_holds = true;
  std::optional<Site> counterexample;
  std::optional<std::int64_t> counterexample_radius;
  double center_value = 0.0;
  double center_bound = 0.0;  // q^{floor((L-W)/ell)-1} max |f|
};

/// Checks both clauses of (ell, q, S, c)-subharmonicity pointwise for f given
/// in cube_sites order, then the radial descent conclusion for every radius
/// r in [W + ell, L - W + ell] against an annulus cover of the c*ell
/// neighbourhood of S.
SubharmonicReport verify_subharmonic_descent(const Cube& cube, std::span<const double> f,
                                             std::int64_t ell, double q,
                                             std::span<const Site> S, double c);

}  // namespace mpa
