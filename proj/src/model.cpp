#include "mpa/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "mpa/error.hpp"
#include "mpa/format.hpp"

namespace mpa {

void InteractionSpec::validate() const {
  if (r0 < 0) throw ConfigError("interaction range r0 must be nonnegative");
  if (phi.size() != static_cast<std::size_t>(r0) + 1) {
    throw ConfigError("interaction table needs r0 + 1 = " + std::to_string(r0 + 1) +
                      " entries, got " + std::to_string(phi.size()));
  }
  for (std::size_t r = 0; r < phi.size(); ++r) {
    if (!(phi[r] >= 0.0) || !std::isfinite(phi[r])) {
      throw ConfigError("interaction phi(" + std::to_string(r) +
                        ") must be a finite nonnegative number");
    }
  }
}

double InteractionSpec::max_value() const {
  return phi.empty() ? 0.0 : *std::max_element(phi.begin(), phi.end());
}

// ---------------------------------------------------------------------------

HamiltonianMatrix::HamiltonianMatrix(Cube cube, Eigen::MatrixXd dense,
                                     std::vector<double> potential)
    : cube_(std::move(cube)), storage_(std::move(dense)), potential_(std::move(potential)) {}

HamiltonianMatrix::HamiltonianMatrix(Cube cube, SparseMatrix sparse,
                                     std::vector<double> potential)
    : cube_(std::move(cube)), storage_(std::move(sparse)), potential_(std::move(potential)) {}

const Eigen::MatrixXd& HamiltonianMatrix::dense() const {
  if (!is_dense()) throw PreconditionError("Hamiltonian is stored sparse");
  return std::get<Eigen::MatrixXd>(storage_);
}

const SparseMatrix& HamiltonianMatrix::sparse() const {
  if (is_dense()) throw PreconditionError("Hamiltonian is stored dense");
  return std::get<SparseMatrix>(storage_);
}

Eigen::MatrixXd HamiltonianMatrix::to_dense(std::size_t cap) const {
  if (is_dense()) return dense();
  if (dim() > cap) {
    throw CapacityError("matrix dimension " + std::to_string(dim()) +
                        " exceeds the dense cap " + std::to_string(cap));
  }
  return Eigen::MatrixXd(sparse());
}

SparseMatrix HamiltonianMatrix::to_sparse() const {
  if (!is_dense()) return sparse();
  return dense().sparseView();
}

double HamiltonianMatrix::coeff(std::size_t i, std::size_t j) const {
  const auto r = static_cast<Eigen::Index>(i);
  const auto c = static_cast<Eigen::Index>(j);
  return is_dense() ? dense()(r, c) : sparse().coeff(r, c);
}

Eigen::VectorXd HamiltonianMatrix::apply(const Eigen::VectorXd& v) const {
  if (is_dense()) return dense() * v;
  return sparse() * v;
}

double HamiltonianMatrix::norm_inf() const {
  if (is_dense()) return dense().cwiseAbs().rowwise().sum().maxCoeff();
  // Symmetric, so column sums equal row sums.
  const SparseMatrix& s = sparse();
  double best = 0.0;
  for (Eigen::Index c = 0; c < s.outerSize(); ++c) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(s, c); it; ++it) sum += std::abs(it.value());
    best = std::max(best, sum);
  }
  return best;
}

double HamiltonianMatrix::trace() const {
  if (is_dense()) return dense().trace();
  double t = 0.0;
  const SparseMatrix& s = sparse();
  for (Eigen::Index i = 0; i < s.rows(); ++i) t += s.coeff(i, i);
  return t;
}

void HamiltonianMatrix::write_coordinate_list(std::ostream& os) const {
  const SparseMatrix s = to_sparse();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows(s);
  for (Eigen::Index r = 0; r < rows.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << format_g17(it.value()) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

double interaction_potential(const Site& x, const InteractionSpec& spec) {
  const int n = x.particles();
  const int d = x.d();
  double u = 0.0;
  for (int i = 0; i < n; ++i) {
    auto xi = x.particle(i);
    for (int j = i + 1; j < n; ++j) {
      auto xj = x.particle(j);
      Coord r = 0;
      for (int k = 0; k < d; ++k) r = std::max(r, std::abs(xi[k] - xj[k]));
      u += spec.at(r);
    }
  }
  return u;
}

double total_potential(const Site& x, const FieldSample& field) {
  double v = 0.0;
  for (int i = 0; i < x.particles(); ++i) v += field.at(x.projection(i));
  return v;
}

namespace {

constexpr std::size_t kMaxDenseDim = 16384;

bool use_dense(const AssemblyOptions& opts, std::size_t dim) {
  switch (opts.storage) {
    case Storage::Dense:
      return true;
    case Storage::Sparse:
      return false;
    case Storage::Auto:
      break;
  }
  return dim <= opts.dense_limit;
}

HamiltonianMatrix build(const Cube& cube, std::vector<double> potential,
                        const AssemblyOptions& opts) {
  const CubeIndexer idx(cube, opts.site_cap);
  const std::size_t dim = idx.size();
  const int D = idx.flat_dim();
  const double diag = 2.0 * D;
  const Coord last = idx.side() - 1;
  const auto n = static_cast<long long>(dim);

  if (use_dense(opts, dim)) {
    if (dim > kMaxDenseDim) {
      throw CapacityError("dense storage requested for dimension " + std::to_string(dim));
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
    // Row i writes only H(i, .), so the loop is race free; each hopping pair is
    // set to the same literal from both rows, which keeps H bitwise symmetric.
#pragma omp parallel for if (opts.workers > 1) num_threads(std::max(1, opts.workers))
    for (long long s = 0; s < n; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const auto r = static_cast<Eigen::Index>(i);
      H(r, r) = diag + potential[i];
      for (int k = 0; k < D; ++k) {
        const Coord o = idx.offset(i, k);
        const std::size_t st = idx.stride(k);
        if (o > 0) H(r, static_cast<Eigen::Index>(i - st)) = -1.0;
        if (o < last) H(r, static_cast<Eigen::Index>(i + st)) = -1.0;
      }
    }
    return HamiltonianMatrix(cube, std::move(H), std::move(potential));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(dim * static_cast<std::size_t>(2 * D + 1));
  for (std::size_t i = 0; i < dim; ++i) {
    const auto r = static_cast<int>(i);
    triplets.emplace_back(r, r, diag + potential[i]);
    for (int k = 0; k < D; ++k) {
      const Coord o = idx.offset(i, k);
      const std::size_t st = idx.stride(k);
      if (o > 0) triplets.emplace_back(r, static_cast<int>(i - st), -1.0);
      if (o < last) triplets.emplace_back(r, static_cast<int>(i + st), -1.0);
    }
  }
  SparseMatrix S(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  S.setFromTriplets(triplets.begin(), triplets.end());
  S.makeCompressed();
  return HamiltonianMatrix(cube, std::move(S), std::move(potential));
}

}  // namespace

std::vector<double> diagonal_potential(const Cube& cube, const FieldSample& field,
                                       const InteractionSpec& interaction, int workers,
                                       std::size_t site_cap) {
  const CubeIndexer idx(cube, site_cap);
  const int n = cube.particles();
  const int d = cube.d();
  const Coord L = cube.radius();

  // C_L(u) is the product of the C_L(u_i); V_total is a Kronecker sum of
  // per-particle tables indexed by the lexicographic position inside C_L(u_i).
  std::vector<std::vector<double>> tables(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Cube proj = cube.projection(i);
    const auto sites = cube_sites(proj, site_cap);
    auto& table = tables[static_cast<std::size_t>(i)];
    table.reserve(sites.size());
    for (const Site& s : sites) table.push_back(field.at(s));
  }
  std::size_t single = 1;
  for (int k = 0; k < d; ++k) single *= static_cast<std::size_t>(idx.side());

  const Site& u = cube.center();
  const bool interacting = n > 1 && interaction.max_value() > 0.0;
  std::vector<double> out(idx.size());
  const auto total = static_cast<long long>(idx.size());
#pragma omp parallel for if (workers > 1) num_threads(std::max(1, workers))
  for (long long s = 0; s < total; ++s) {
    const auto site = static_cast<std::size_t>(s);
    double v = 0.0;
    std::size_t rest = site;
    for (int i = n; i-- > 0;) {
      v += tables[static_cast<std::size_t>(i)][rest % single];
      rest /= single;
    }
    if (interacting) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          Coord r = 0;
          for (int k = 0; k < d; ++k) {
            const int ki = i * d + k;
            const int kj = j * d + k;
            const Coord xi = u[static_cast<std::size_t>(ki)] + idx.offset(site, ki) - L;
            const Coord xj = u[static_cast<std::size_t>(kj)] + idx.offset(site, kj) - L;
            r = std::max(r, std::abs(xi - xj));
          }
          v += interaction.at(r);
        }
      }
    }
    out[site] = v;
  }
  return out;
}

HamiltonianMatrix assemble_laplacian(const Cube& cube, const AssemblyOptions& opts) {
  return build(cube, std::vector<double>(CubeIndexer(cube, opts.site_cap).size(), 0.0), opts);
}

HamiltonianMatrix assemble_hamiltonian(const Cube& cube, const FieldSample& field,
                                       const InteractionSpec& interaction,
                                       const AssemblyOptions& opts) {
  interaction.validate();
  return build(cube,
               diagonal_potential(cube, field, interaction, opts.workers, opts.site_cap), opts);
}

HamiltonianMatrix assemble_hamiltonian_reference(const Cube& cube, const FieldSample& field,
                                                 const InteractionSpec& interaction) {
  interaction.validate();
  const auto sites = cube_sites(cube);
  const auto dim = static_cast<Eigen::Index>(sites.size());
  const double diag = 2.0 * cube.flat_dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<double> potential(sites.size());
  for (std::size_t a = 0; a < sites.size(); ++a) {
    const Site& x = sites[a];
    potential[a] = total_potential(x, field) + interaction_potential(x, interaction);
    const auto r = static_cast<Eigen::Index>(a);
    H(r, r) = diag + potential[a];
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (Coord step : {Coord{-1}, Coord{1}}) {
        auto c = x.coords();
        c[k] += step;
        Site y(x.d(), std::move(c));
        if (cube.contains(y)) H(r, static_cast<Eigen::Index>(cube.index_of(y))) = -1.0;
      }
    }
  }
  return HamiltonianMatrix(cube, std::move(H), std::move(potential));
}

}  // namespace mpa
