#pragma once

// Finite-volume n-particle Hamiltonian H = -Delta + U + V on a cube with simple
// boundary conditions: diagonal 2nd everywhere, hopping -1 between l1-adjacent
// sites of the cube, nothing across the cube boundary.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "mpa/disorder.hpp"
#include "mpa/geometry.hpp"

namespace mpa {

/// U(x) = sum over unordered particle pairs of phi(|x_i - x_j|), phi(r) = 0 for r > r0.
struct InteractionSpec {
  int r0 = 0;
  std::vector<double> phi{0.0};  // phi[0..r0]

  void validate() const;
  double at(Coord r) const {
    return r >= 0 && r <= r0 ? phi[static_cast<std::size_t>(r)] : 0.0;
  }
  double max_value() const;
  static InteractionSpec none() { return {}; }
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

enum class Storage { Auto, Dense, Sparse };

struct AssemblyOptions {
  Storage storage = Storage::Auto;
  std::size_t site_cap = kDefaultSiteCap;
  std::size_t dense_limit = 4096;  // Auto picks dense up to this dimension
  int workers = 1;                 // row-parallel assembly when > 1
};

class HamiltonianMatrix {
 public:
  HamiltonianMatrix(Cube cube, Eigen::MatrixXd dense, std::vector<double> potential);
  HamiltonianMatrix(Cube cube, SparseMatrix sparse, std::vector<double> potential);

  const Cube& cube() const { return cube_; }
  std::size_t dim() const { return potential_.size(); }
  bool is_dense() const { return std::holds_alternative<Eigen::MatrixXd>(storage_); }

  /// Dense storage; throws PreconditionError when stored sparse.
  const Eigen::MatrixXd& dense() const;
  const SparseMatrix& sparse() const;
  /// Copies into the requested layout; to_dense honors `cap`.
  Eigen::MatrixXd to_dense(std::size_t cap = 4096) const;
  SparseMatrix to_sparse() const;

  double coeff(std::size_t i, std::size_t j) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  /// The V + U part of the diagonal, per site.
  std::span<const double> potential_trace() const { return potential_; }
  /// Infinity norm (max absolute row sum).
  double norm_inf() const;
  double trace() const;

  /// Coordinate-list dump: "i j value" per nonzero, 17 significant digits.
  void write_coordinate_list(std::ostream& os) const;

 private:
  Cube cube_;
  std::variant<Eigen::MatrixXd, SparseMatrix> storage_;
  std::vector<double> potential_;
};

double interaction_potential(const Site& x, const InteractionSpec& spec);

/// V(x_1) + ... + V(x_n), coinciding particles counted with multiplicity.
double total_potential(const Site& x, const FieldSample& field);

/// -Delta restricted to the cube.
HamiltonianMatrix assemble_laplacian(const Cube& cube, const AssemblyOptions& opts = {});

/// -Delta + U + V restricted to the cube. The field must cover every C_L(u_i).
HamiltonianMatrix assemble_hamiltonian(const Cube& cube, const FieldSample& field,
                                       const InteractionSpec& interaction,
                                       const AssemblyOptions& opts = {});

/// Same operator built site by site through Site objects and hash lookups;
/// the reference the fast path is tested against.
HamiltonianMatrix assemble_hamiltonian_reference(const Cube& cube, const FieldSample& field,
                                                 const InteractionSpec& interaction);

/// Per-site diagonal V + U of the cube in index order (the fast kernel).
std::vector<double> diagonal_potential(const Cube& cube, const FieldSample& field,
                                       const InteractionSpec& interaction, int workers = 1,
                                       std::size_t site_cap = kDefaultSiteCap);

}  // namespace mpa
