#pragma once

// Eigen-decomposition, Green functions G(E) = (H - E)^{-1}, distance to the
// spectrum, and numerical checks of the Combes-Thomas bound and the
// geometric resolvent identity.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpa/geometry.hpp"
#include "mpa/model.hpp"

namespace mpa {

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column j pairs with eigenvalues(j); indexed like cube_sites

  std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
  bool has_vectors() const { return eigenvectors.cols() == eigenvalues.size(); }
};

struct DiagonalizeOptions {
  std::size_t dense_cap = 4096;
  bool vectors = true;
  bool verify = true;  // residual and orthonormality checks
};

/// Full symmetric eigensolve. Eigenvectors are sign-fixed so their first
/// non-negligible component is positive. Throws NumericError ("eigensolve
/// failed") with a matrix fingerprint when convergence or verification fails.
SpectralDecomposition diagonalize(const HamiltonianMatrix& H, const DiagonalizeOptions& opts = {});

/// min_j |lambda_j - E| for ascending eigenvalues.
double dist_to_spectrum(const Eigen::VectorXd& eigenvalues, double E);
inline double dist_to_spectrum(const SpectralDecomposition& decomp, double E) {
  return dist_to_spectrum(decomp.eigenvalues, E);
}

/// Smallest spacing min_{i,j} |a_i - b_j| between two ascending spectra.
double spectral_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Linear-solve access to columns of (H - E)^{-1}: dense LU up to the dense
/// limit, otherwise preconditioned CG with a sparse LU fallback. Every column
/// is residual-checked.
class GreenSolver {
 public:
  GreenSolver(const HamiltonianMatrix& H, double E);
  ~GreenSolver();
  GreenSolver(GreenSolver&&) noexcept;
  GreenSolver& operator=(GreenSolver&&) noexcept;

  double energy() const { return energy_; }
  /// G(., y) for site index y.
  Eigen::VectorXd column(std::size_t y) const;
  /// The full inverse (dense storage only).
  Eigen::MatrixXd inverse() const;

 private:
  struct Impl;
  const HamiltonianMatrix* H_;
  double energy_;
  std::unique_ptr<Impl> impl_;
};

struct GreenEntry {
  std::size_t x = 0;
  std::size_t y = 0;
  double value = 0.0;
};

struct GreenFunctionSlice {
  double energy = 0.0;
  std::vector<GreenEntry> entries;

  /// Looks up (x, y) or (y, x); throws if neither was requested.
  double value(std::size_t x, std::size_t y) const;
};

/// G(x, y; E) for the requested (site index) pairs, one solve per distinct y.
/// Throws ResonantEnergyError when E sits on the spectrum to solver precision.
GreenFunctionSlice green_entries(const HamiltonianMatrix& H, double E,
                                 std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// Sum_j psi_j(x) psi_j(y) / (lambda_j - E) for row and column index sets.
Eigen::MatrixXd green_block(const SpectralDecomposition& decomp, double E,
                            std::span<const std::size_t> rows, std::span<const std::size_t> cols);

/// 2 / eta * exp(-eta / (12 D) * r).
double combes_thomas_bound(double eta, int D, double r);

struct CombesThomasReport {
  bool holds = true;            // every pair within the bound, max-norm distance
  double worst_ratio = 0.0;     // max |G(x,y)| / bound
  std::pair<std::size_t, std::size_t> worst_pair{0, 0};
  bool holds_l1 = true;         // same with l1 distance in the exponent
  double worst_ratio_l1 = 0.0;
  std::pair<std::size_t, std::size_t> worst_pair_l1{0, 0};
  double eta = 0.0;
  double distance = 0.0;        // dist(E, sigma(H))
  std::size_t pairs_checked = 0;
};

/// Evaluates |G(x,y;E)| <= 2/eta exp(-eta |x-y| / 12D), D = nd, over all site
/// pairs. Requires eta in (0,1] and dist(E, sigma(H)) >= eta ("eta too large").
CombesThomasReport combes_thomas_check(const HamiltonianMatrix& H, double E, double eta,
                                       int workers = 1);
/// Single-threaded reference of the same sweep.
CombesThomasReport combes_thomas_check_serial(const HamiltonianMatrix& H, double E, double eta);

struct GriReport {
  double lhs = 0.0;          // G_big(x, y)
  double rhs = 0.0;          // sum over boundary edges of G_sub(x,v) G_big(v',y)
  double residual = 0.0;     // |lhs - rhs|
  std::size_t edges = 0;
  std::size_t internal_boundary = 0;
  /// |d^- C_sub| * max_{v in C_sub} |G_sub(x,v)| * max_{v' in d^+ C_sub} |G_big(v',y)|
  double gri_bound = 0.0;
  bool gri_holds = false;
  /// Same product with the edge count as prefactor; follows from the identity.
  double edge_bound = 0.0;
  bool edge_bound_holds = false;
};

/// Both sides of the geometric resolvent identity for x in the sub-cube and
/// y in big \ sub. The two operators must come from the same field.
GriReport verify_gri(const HamiltonianMatrix& big, const HamiltonianMatrix& sub, double E,
                     const Site& x, const Site& y);

/// |psi_j(x) - sum_{edges} G_sub(x,v; lambda_j) psi_j(v')| for an eigenpair of
/// the big operator and x in the sub-cube.
double verify_eigenfunction_gre(const HamiltonianMatrix& big, const SpectralDecomposition& decomp,
                                std::size_t j, const HamiltonianMatrix& sub, const Site& x);

/// Counts eigenvalues <= t via the inertia of an LDL^T factorization of H - t.
/// Reuses the symbolic analysis while the sparsity pattern stays the same.
class InertiaCounter {
 public:
  std::size_t count_at_or_below(const HamiltonianMatrix& H, double t);

 private:
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Eigen::Index analyzed_dim_ = -1;
  Eigen::Index analyzed_nnz_ = -1;
};

/// Hex fingerprint of a matrix's entries (for error reports).
std::string matrix_fingerprint(const HamiltonianMatrix& H);

}  // namespace mpa
