#include "mpa/spectral.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "mpa/error.hpp"

namespace mpa {

namespace {

constexpr double kResidualTol = 1e-9;
constexpr double kResonanceFloor = 1e-12;

Eigen::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Offsets from the cube corner per flat coordinate, precomputed per site.
std::vector<Coord> site_offsets(const CubeIndexer& idx) {
  const int D = idx.flat_dim();
  std::vector<Coord> out(idx.size() * static_cast<std::size_t>(D));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int k = 0; k < D; ++k) out[i * static_cast<std::size_t>(D) + k] = idx.offset(i, k);
  }
  return out;
}

}  // namespace

std::string matrix_fingerprint(const HamiltonianMatrix& H) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t dim = H.dim();
  mix(&dim, sizeof(dim));
  const SparseMatrix s = H.to_sparse();
  for (Eigen::Index c = 0; c < s.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(s, c); it; ++it) {
      const std::int64_t r = it.row();
      const double v = it.value();
      mix(&r, sizeof(r));
      mix(&v, sizeof(v));
    }
  }
  return "dim=" + std::to_string(dim) + " fnv=" + hex64(h);
}

SpectralDecomposition diagonalize(const HamiltonianMatrix& H, const DiagonalizeOptions& opts) {
  const Eigen::MatrixXd A = H.to_dense(opts.dense_cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      A, opts.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigensolve failed (" + matrix_fingerprint(H) + ")");
  }
  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues();
  if (!opts.vectors) return out;
  out.eigenvectors = es.eigenvectors();

  for (Eigen::Index j = 0; j < out.eigenvectors.cols(); ++j) {
    auto col = out.eigenvectors.col(j);
    const double big = col.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > 1e-10 * big) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
  }

  if (opts.verify && A.rows() > 0) {
    const double scale = A.cwiseAbs().rowwise().sum().maxCoeff();
    const Eigen::MatrixXd R =
        A * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      const double tol = 1e-9 * (1.0 + std::abs(out.eigenvalues(j))) * std::max(1.0, scale);
      if (!(R.col(j).norm() <= tol)) {
        throw NumericError("eigensolve failed: residual check (" + matrix_fingerprint(H) + ")");
      }
    }
    const Eigen::MatrixXd gram = out.eigenvectors.transpose() * out.eigenvectors;
    const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                           .cwiseAbs()
                           .maxCoeff();
    if (!(off <= 1e-9)) {
      throw NumericError("eigensolve failed: orthonormality check (" + matrix_fingerprint(H) +
                         ")");
    }
  }
  return out;
}

double dist_to_spectrum(const Eigen::VectorXd& eigenvalues, double E) {
  if (eigenvalues.size() == 0) return std::numeric_limits<double>::infinity();
  const double* begin = eigenvalues.data();
  const double* end = begin + eigenvalues.size();
  const double* it = std::lower_bound(begin, end, E);
  double best = std::numeric_limits<double>::infinity();
  if (it != end) best = *it - E;
  if (it != begin) best = std::min(best, E - *(it - 1));
  return best;
}

double spectral_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  while (i < a.size() && j < b.size()) {
    best = std::min(best, std::abs(a(i) - b(j)));
    if (a(i) < b(j)) {
      ++i;
    } else {
      ++j;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

struct GreenSolver::Impl {
  bool dense = true;
  std::size_t dim = 0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::MatrixXd A;
  SparseMatrix S;
  bool spd = false;  // E below a Gershgorin lower bound of H
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix>> slu;
  double energy = 0.0;

  void ensure_sparse_lu() {
    if (slu) return;
    slu = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
    slu->analyzePattern(S);
    slu->factorize(S);
    if (slu->info() != Eigen::Success) {
      throw ResonantEnergyError("resonant energy: sparse factorization of H - E failed at E = " +
                                std::to_string(energy));
    }
  }

  double residual(const Eigen::VectorXd& g, std::size_t y) const {
    Eigen::VectorXd r = dense ? Eigen::VectorXd(A * g) : Eigen::VectorXd(S * g);
    r(as_index(y)) -= 1.0;
    return max_abs(r);
  }
};

GreenSolver::GreenSolver(const HamiltonianMatrix& H, double E)
    : H_(&H), energy_(E), impl_(std::make_unique<Impl>()) {
  Impl& im = *impl_;
  im.dim = H.dim();
  im.energy = E;
  im.dense = H.is_dense();
  const double floor = kResonanceFloor * std::max(1.0, H.norm_inf());
  if (im.dense) {
    im.A = H.dense();
    im.A.diagonal().array() -= E;
    im.lu.compute(im.A);
    const double norm1 = im.A.cwiseAbs().colwise().sum().maxCoeff();
    const double rcond = im.lu.rcond();
    // rcond * |A|_1 estimates the smallest singular value, which for a
    // symmetric matrix is dist(E, sigma(H)).
    if (!(rcond * norm1 >= floor)) {
      throw ResonantEnergyError("resonant energy: E = " + std::to_string(E) +
                                " lies within the solver floor of the spectrum");
    }
    return;
  }
  im.S = H.sparse();
  double gersh = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < im.S.outerSize(); ++c) {
    double diag = 0.0;
    double off = 0.0;
    for (SparseMatrix::InnerIterator it(im.S, c); it; ++it) {
      if (it.row() == c) {
        diag = it.value();
      } else {
        off += std::abs(it.value());
      }
    }
    gersh = std::min(gersh, diag - off);
  }
  for (Eigen::Index i = 0; i < im.S.rows(); ++i) im.S.coeffRef(i, i) -= E;
  im.S.makeCompressed();
  im.spd = E < gersh - floor;
  if (im.spd) {
    im.cg.setTolerance(1e-14);
    im.cg.setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(1000, 10 * im.dim)));
    im.cg.compute(im.S);
  } else {
    im.ensure_sparse_lu();
  }
}

GreenSolver::~GreenSolver() = default;
GreenSolver::GreenSolver(GreenSolver&&) noexcept = default;
GreenSolver& GreenSolver::operator=(GreenSolver&&) noexcept = default;

Eigen::VectorXd GreenSolver::column(std::size_t y) const {
  const Impl& im = *impl_;
  if (y >= im.dim) throw PreconditionError("Green column index out of range");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(as_index(im.dim));
  e(as_index(y)) = 1.0;
  Eigen::VectorXd g;
  if (im.dense) {
    g = im.lu.solve(e);
  } else {
    if (im.spd) {
      g = im.cg.solve(e);
      if (im.cg.info() != Eigen::Success || !(im.residual(g, y) <= kResidualTol)) g.resize(0);
    }
    if (g.size() == 0) {
      if (im.slu) {
        g = im.slu->solve(e);
      } else {
        // CG stalled on an SPD system; factor locally so column() stays const-safe.
        Eigen::SparseLU<SparseMatrix> lu(im.S);
        if (lu.info() != Eigen::Success) {
          throw ResonantEnergyError("resonant energy: sparse factorization of H - E failed");
        }
        g = lu.solve(e);
      }
    }
  }
  const double res = im.residual(g, y);
  if (!(res <= kResidualTol)) {
    throw ResonantEnergyError("resonant energy: solve residual " + std::to_string(res) +
                              " exceeds 1e-9 at E = " + std::to_string(energy_));
  }
  return g;
}

Eigen::MatrixXd GreenSolver::inverse() const {
  const Impl& im = *impl_;
  if (im.dense) {
    Eigen::MatrixXd G = im.lu.inverse();
    const double res = (im.A * G - Eigen::MatrixXd::Identity(G.rows(), G.cols()))
                           .cwiseAbs()
                           .maxCoeff();
    if (!(res <= kResidualTol)) {
      throw ResonantEnergyError("resonant energy: inverse residual " + std::to_string(res) +
                                " exceeds 1e-9 at E = " + std::to_string(energy_));
    }
    return G;
  }
  if (im.dim > 4096) throw CapacityError("full Green matrix requested above dimension 4096");
  Eigen::MatrixXd G(as_index(im.dim), as_index(im.dim));
  for (std::size_t y = 0; y < im.dim; ++y) G.col(as_index(y)) = column(y);
  return G;
}

double GreenFunctionSlice::value(std::size_t x, std::size_t y) const {
  for (const GreenEntry& e : entries) {
    if ((e.x == x && e.y == y) || (e.x == y && e.y == x)) return e.value;
  }
  throw PreconditionError("Green entry was not requested");
}

GreenFunctionSlice green_entries(const HamiltonianMatrix& H, double E,
                                 std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  GreenSolver solver(H, E);
  std::map<std::size_t, Eigen::VectorXd> columns;
  GreenFunctionSlice out;
  out.energy = E;
  out.entries.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    if (x >= H.dim() || y >= H.dim()) throw PreconditionError("Green entry index out of range");
    auto it = columns.find(y);
    if (it == columns.end()) it = columns.emplace(y, solver.column(y)).first;
    out.entries.push_back({x, y, it->second(as_index(x))});
  }
  return out;
}

Eigen::MatrixXd green_block(const SpectralDecomposition& decomp, double E,
                            std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  if (!decomp.has_vectors()) throw PreconditionError("green_block needs eigenvectors");
  const Eigen::Index k = decomp.eigenvalues.size();
  Eigen::MatrixXd Pr(as_index(rows.size()), k);
  Eigen::MatrixXd Pc(as_index(cols.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i) Pr.row(as_index(i)) = decomp.eigenvectors.row(as_index(rows[i]));
  for (std::size_t i = 0; i < cols.size(); ++i) Pc.row(as_index(i)) = decomp.eigenvectors.row(as_index(cols[i]));
  const Eigen::VectorXd w = (decomp.eigenvalues.array() - E).inverse().matrix();
  return Pr * w.asDiagonal() * Pc.transpose();
}

// ---------------------------------------------------------------------------

double combes_thomas_bound(double eta, int D, double r) {
  return 2.0 / eta * std::exp(-eta / (12.0 * D) * r);
}

namespace {

struct CtSetup {
  Eigen::MatrixXd G;
  std::vector<Coord> offsets;
  int D = 1;
  std::size_t dim = 0;
  double distance = 0.0;
};

CtSetup prepare_ct(const HamiltonianMatrix& H, double E, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw PreconditionError("eta must lie in (0, 1]");
  CtSetup s;
  const Eigen::MatrixXd A = H.to_dense(4096);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigensolve failed (" + matrix_fingerprint(H) + ")");
  }
  s.distance = dist_to_spectrum(es.eigenvalues(), E);
  if (s.distance < eta) {
    throw PreconditionError("eta too large: dist(E, sigma) = " + std::to_string(s.distance) +
                            " < eta = " + std::to_string(eta));
  }
  s.G = GreenSolver(H, E).inverse();
  const CubeIndexer idx(H.cube(), H.dim());
  s.offsets = site_offsets(idx);
  s.D = idx.flat_dim();
  s.dim = idx.size();
  return s;
}

struct RowBest {
  double ratio = -1.0;
  std::size_t col = 0;
  double ratio_l1 = -1.0;
  std::size_t col_l1 = 0;
};

RowBest scan_row(const CtSetup& s, double eta, std::size_t i) {
  RowBest best;
  const auto D = static_cast<std::size_t>(s.D);
  const Coord* xi = s.offsets.data() + i * D;
  for (std::size_t j = 0; j < s.dim; ++j) {
    const Coord* yj = s.offsets.data() + j * D;
    Coord rmax = 0;
    Coord rl1 = 0;
    for (std::size_t k = 0; k < D; ++k) {
      const Coord diff = std::abs(xi[k] - yj[k]);
      rmax = std::max(rmax, diff);
      rl1 += diff;
    }
    const double g = std::abs(s.G(as_index(i), as_index(j)));
    const double ratio = g / combes_thomas_bound(eta, s.D, static_cast<double>(rmax));
    const double ratio_l1 = g / combes_thomas_bound(eta, s.D, static_cast<double>(rl1));
    if (ratio > best.ratio) {
      best.ratio = ratio;
      best.col = j;
    }
    if (ratio_l1 > best.ratio_l1) {
      best.ratio_l1 = ratio_l1;
      best.col_l1 = j;
    }
  }
  return best;
}

CombesThomasReport reduce_rows(const CtSetup& s, double eta, const std::vector<RowBest>& rows) {
  CombesThomasReport rep;
  rep.eta = eta;
  rep.distance = s.distance;
  rep.pairs_checked = s.dim * s.dim;
  rep.worst_ratio = -1.0;
  rep.worst_ratio_l1 = -1.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].ratio > rep.worst_ratio) {
      rep.worst_ratio = rows[i].ratio;
      rep.worst_pair = {i, rows[i].col};
    }
    if (rows[i].ratio_l1 > rep.worst_ratio_l1) {
      rep.worst_ratio_l1 = rows[i].ratio_l1;
      rep.worst_pair_l1 = {i, rows[i].col_l1};
    }
  }
  rep.holds = rep.worst_ratio <= 1.0;
  rep.holds_l1 = rep.worst_ratio_l1 <= 1.0;
  return rep;
}

}  // namespace

CombesThomasReport combes_thomas_check(const HamiltonianMatrix& H, double E, double eta,
                                       int workers) {
  const CtSetup s = prepare_ct(H, E, eta);
  std::vector<RowBest> rows(s.dim);
  const auto n = static_cast<long long>(s.dim);
#pragma omp parallel for schedule(static) if (workers > 1) num_threads(std::max(1, workers))
  for (long long i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = scan_row(s, eta, static_cast<std::size_t>(i));
  return reduce_rows(s, eta, rows);
}

CombesThomasReport combes_thomas_check_serial(const HamiltonianMatrix& H, double E, double eta) {
  const CtSetup s = prepare_ct(H, E, eta);
  std::vector<RowBest> rows;
  rows.reserve(s.dim);
  for (std::size_t i = 0; i < s.dim; ++i) rows.push_back(scan_row(s, eta, i));
  return reduce_rows(s, eta, rows);
}

// ---------------------------------------------------------------------------

GriReport verify_gri(const HamiltonianMatrix& big, const HamiltonianMatrix& sub, double E,
                     const Site& x, const Site& y) {
  const Cube& B = big.cube();
  const Cube& S = sub.cube();
  if (!B.contains(S)) throw PreconditionError("sub-cube must lie inside the big cube");
  if (!S.contains(x)) throw PreconditionError("x must lie in the sub-cube");
  if (!B.contains(y) || S.contains(y)) {
    throw PreconditionError("y must lie in the big cube outside the sub-cube");
  }
  const Eigen::VectorXd Gbig_y = GreenSolver(big, E).column(B.index_of(y));
  const Eigen::VectorXd Gsub_x = GreenSolver(sub, E).column(S.index_of(x));

  GriReport rep;
  rep.lhs = Gbig_y(as_index(B.index_of(x)));
  double max_big = 0.0;
  double max_sub_edge = 0.0;
  for (const auto& [v, vp] : boundary_edge_pairs(S)) {
    if (!B.contains(vp)) continue;
    const double gs = Gsub_x(as_index(S.index_of(v)));
    const double gb = Gbig_y(as_index(B.index_of(vp)));
    rep.rhs += gs * gb;
    ++rep.edges;
    max_big = std::max(max_big, std::abs(gb));
    max_sub_edge = std::max(max_sub_edge, std::abs(gs));
  }
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.internal_boundary = internal_boundary(S).size();
  const double max_sub = max_abs(Gsub_x);
  rep.gri_bound = static_cast<double>(rep.internal_boundary) * max_sub * max_big;
  rep.edge_bound = static_cast<double>(rep.edges) * max_sub_edge * max_big;
  const double slack = 1e-12 * (1.0 + std::abs(rep.lhs));
  rep.gri_holds = std::abs(rep.lhs) <= rep.gri_bound + slack;
  rep.edge_bound_holds = std::abs(rep.lhs) <= rep.edge_bound + slack;
  return rep;
}

double verify_eigenfunction_gre(const HamiltonianMatrix& big, const SpectralDecomposition& decomp,
                                std::size_t j, const HamiltonianMatrix& sub, const Site& x) {
  const Cube& B = big.cube();
  const Cube& S = sub.cube();
  if (!decomp.has_vectors() || j >= decomp.dim()) {
    throw PreconditionError("eigenpair index out of range");
  }
  if (!B.contains(S)) throw PreconditionError("sub-cube must lie inside the big cube");
  if (!S.contains(x)) throw PreconditionError("x must lie in the sub-cube");
  const double E = decomp.eigenvalues(as_index(j));
  const auto psi = decomp.eigenvectors.col(as_index(j));
  const Eigen::VectorXd Gsub_x = GreenSolver(sub, E).column(S.index_of(x));
  double sum = 0.0;
  for (const auto& [v, vp] : boundary_edge_pairs(S)) {
    if (!B.contains(vp)) continue;
    sum += Gsub_x(as_index(S.index_of(v))) * psi(as_index(B.index_of(vp)));
  }
  return std::abs(psi(as_index(B.index_of(x))) - sum);
}

// ---------------------------------------------------------------------------

std::size_t InertiaCounter::count_at_or_below(const HamiltonianMatrix& H, double t) {
  SparseMatrix A = H.to_sparse();
  for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) -= t;
  A.makeCompressed();
  if (A.rows() != analyzed_dim_ || A.nonZeros() != analyzed_nnz_) {
    ldlt_.analyzePattern(A);
    analyzed_dim_ = A.rows();
    analyzed_nnz_ = A.nonZeros();
  }
  ldlt_.factorize(A);
  if (ldlt_.info() == Eigen::Success) {
    const Eigen::VectorXd D = ldlt_.vectorD();
    if (D.allFinite()) {
      std::size_t count = 0;
      for (Eigen::Index i = 0; i < D.size(); ++i) count += D(i) <= 0.0 ? 1 : 0;
      return count;
    }
  }
  // A zero pivot means t hit the spectrum of a leading block; fall back to
  // an explicit eigensolve when the size allows it.
  DiagonalizeOptions opts;
  opts.vectors = false;
  const auto decomp = diagonalize(H, opts);
  return static_cast<std::size_t>(
      std::upper_bound(decomp.eigenvalues.data(),
                       decomp.eigenvalues.data() + decomp.eigenvalues.size(), t) -
      decomp.eigenvalues.data());
}

}  // namespace mpa
