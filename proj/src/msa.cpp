#include "mpa/msa.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mpa/error.hpp"
#include "mpa/parallel.hpp"

namespace mpa {

namespace {

Eigen::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Max-norm distance from the cube center, from corner offsets.
Coord radius_of(const CubeIndexer& idx, std::size_t i, Coord L) {
  Coord r = 0;
  for (int k = 0; k < idx.flat_dim(); ++k) r = std::max(r, std::abs(idx.offset(i, k) - L));
  return r;
}

// All offsets delta in [-R, R]^D with inner <= |delta| <= R.
std::vector<std::vector<Coord>> shell_offsets(int D, Coord inner, Coord R) {
  std::vector<std::vector<Coord>> out;
  std::vector<Coord> delta(static_cast<std::size_t>(D), -R);
  while (true) {
    Coord m = 0;
    for (Coord v : delta) m = std::max(m, std::abs(v));
    if (m >= inner) out.push_back(delta);
    int k = D - 1;
    while (k >= 0 && delta[static_cast<std::size_t>(k)] == R) {
      delta[static_cast<std::size_t>(k)] = -R;
      --k;
    }
    if (k < 0) break;
    ++delta[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace

std::string to_string(GammaExponent g) {
  return g == GammaExponent::Quarter ? "quarter" : "eighth";
}

GammaExponent parse_gamma_exponent(const std::string& s) {
  if (s == "quarter") return GammaExponent::Quarter;
  if (s == "eighth") return GammaExponent::Eighth;
  throw ConfigError("gamma exponent must be 'quarter' or 'eighth', got '" + s + "'");
}

void MsaParams::validate() const {
  if (!(p > 0.0)) throw ConfigError("msa.p must be positive");
  if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("msa.m must be finite and nonnegative");
  if (L0 < 3) throw ConfigError("msa.L0 must be at least 3");
  if (!(E_star > 0.0)) throw ConfigError("msa.E_star must be positive");
  if (N < 1) throw ConfigError("msa.N must be at least 1");
}

double gamma(double m, std::int64_t L, int n, int N, GammaExponent e) {
  if (L < 1) throw PreconditionError("gamma needs L >= 1");
  if (n < 1 || n > N) throw PreconditionError("gamma needs 1 <= n <= N");
  // Nested square roots keep powers of two exact (16^{-1/4} = 0.5).
  double root = std::sqrt(std::sqrt(static_cast<double>(L)));
  if (e == GammaExponent::Eighth) root = std::sqrt(root);
  const double base = 1.0 + 1.0 / root;
  double factor = 1.0;
  for (int k = 0; k < N - n + 1; ++k) factor *= base;
  return m * factor;
}

InitialConstants initial_constants(int N, int d, std::int64_t L0) {
  if (L0 < 3) throw PreconditionError("initial constants need L0 >= 3");
  if (N < 1 || d < 1) throw PreconditionError("initial constants need N, d >= 1");
  double NN = 1.0;
  for (int k = 0; k < N; ++k) NN *= N;
  const double core = 14.0 * NN + 6.0 * N * d;
  const double pref = 12.0 * N * d * std::ldexp(1.0, N + 1);
  InitialConstants c;
  c.m = core / std::sqrt(static_cast<double>(L0));
  c.E_star = pref * c.m;
  c.C = pref * core;
  return c;
}

double resonance_width(std::int64_t L) { return std::exp(-std::sqrt(static_cast<double>(L))); }

bool is_resonant(const Eigen::VectorXd& eigenvalues, double E, std::int64_t L) {
  return dist_to_spectrum(eigenvalues, E) <= resonance_width(L);
}

std::int64_t core_radius(std::int64_t L) {
  if (L < 0) throw PreconditionError("core radius needs L >= 0");
  return static_cast<std::int64_t>(icbrt(static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L)));
}

double ds_bound(std::int64_t L, double p, int n, int N) {
  return std::pow(static_cast<double>(L), -p * std::ldexp(1.0, N - n + 1));
}

double ds_bound_two_p(std::int64_t L, double p) {
  return std::pow(static_cast<double>(L), -2.0 * p);
}

nlohmann::json SingularityVerdict::to_json() const {
  nlohmann::json j;
  j["cube"] = {{"center", cube.center().coords()}, {"radius", cube.radius()}};
  j["E"] = energy;
  j["L"] = cube.radius();
  j["n"] = cube.particles();
  j["verdict"] = is_ns ? "NS" : (resonant ? "S(resonant)" : "S");
  j["observed_max"] = observed_max ? nlohmann::json(*observed_max) : nlohmann::json(nullptr);
  j["threshold"] = threshold;
  return j;
}

// ---------------------------------------------------------------------------

SingularityScanner::SingularityScanner(const Cube& cube, const SpectralDecomposition& decomp)
    : cube_(cube), eigenvalues_(decomp.eigenvalues) {
  if (cube.radius() < 1) throw PreconditionError("NS predicates require L >= 1");
  if (!decomp.has_vectors()) throw PreconditionError("NS predicates need eigenvectors");
  const CubeIndexer idx(cube, decomp.dim());
  if (idx.size() != decomp.dim()) throw PreconditionError("decomposition does not match the cube");
  const Coord L = cube.radius();
  const Coord core = std::min<Coord>(core_radius(L), L);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (radius_of(idx, i, L) <= core) core_.push_back(i);
  }
  boundary_ = internal_boundary_indices(cube, decomp.dim());
  const Eigen::Index dim = as_index(decomp.dim());
  products_.resize(as_index(core_.size() * boundary_.size()), dim);
  for (std::size_t a = 0; a < core_.size(); ++a) {
    const auto px = decomp.eigenvectors.row(as_index(core_[a]));
    for (std::size_t b = 0; b < boundary_.size(); ++b) {
      products_.row(as_index(a * boundary_.size() + b)) =
          px.cwiseProduct(decomp.eigenvectors.row(as_index(boundary_[b])));
    }
  }
}

double SingularityScanner::observed_max(double E) const {
  const Eigen::VectorXd w = (eigenvalues_.array() - E).inverse().matrix();
  return (products_ * w).cwiseAbs().maxCoeff();
}

SingularityVerdict SingularityScanner::verdict(double E, const MsaParams& params) const {
  SingularityVerdict v;
  v.cube = cube_;
  v.energy = E;
  const std::int64_t L = cube_.radius();
  v.threshold =
      std::exp(-gamma(params.m, L, cube_.particles(), params.N, params.gamma_exponent) *
               static_cast<double>(L));
  v.resonant = is_resonant(eigenvalues_, E, L);
  if (v.resonant) {
    v.is_ns = false;
    return v;
  }
  v.observed_max = observed_max(E);
  v.is_ns = *v.observed_max <= v.threshold;
  return v;
}

std::vector<SingularityVerdict> SingularityScanner::scan(std::span<const double> energies,
                                                         const MsaParams& params) const {
  std::vector<SingularityVerdict> out;
  out.reserve(energies.size());
  const std::int64_t L = cube_.radius();
  const double threshold =
      std::exp(-gamma(params.m, L, cube_.particles(), params.N, params.gamma_exponent) *
               static_cast<double>(L));
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < energies.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, energies.size() - start);
    Eigen::MatrixXd W(eigenvalues_.size(), as_index(count));
    std::vector<bool> resonant(count);
    for (std::size_t e = 0; e < count; ++e) {
      const double E = energies[start + e];
      resonant[e] = is_resonant(eigenvalues_, E, L);
      // Resonant columns are zeroed; their verdict does not use the product.
      if (resonant[e]) {
        W.col(as_index(e)).setZero();
      } else {
        W.col(as_index(e)) = (eigenvalues_.array() - E).inverse().matrix();
      }
    }
    const Eigen::MatrixXd G = products_ * W;
    for (std::size_t e = 0; e < count; ++e) {
      SingularityVerdict v;
      v.cube = cube_;
      v.energy = energies[start + e];
      v.threshold = threshold;
      v.resonant = resonant[e];
      if (!v.resonant) {
        v.observed_max = G.rows() == 0 ? 0.0 : G.col(as_index(e)).cwiseAbs().maxCoeff();
        v.is_ns = *v.observed_max <= threshold;
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

SingularityVerdict is_ns(const HamiltonianMatrix& H, const SpectralDecomposition& decomp, double E,
                         const MsaParams& params) {
  if (H.cube().particles() > params.N) throw PreconditionError("cube has more than N particles");
  return SingularityScanner(H.cube(), decomp).verdict(E, params);
}

std::vector<double> energy_grid(double lo, double hi, std::int64_t L, std::size_t cap) {
  if (!(lo <= hi)) throw PreconditionError("energy grid needs lo <= hi");
  const double step = resonance_width(L) / 4.0;
  const double span = (hi - lo) / step;
  if (!(span < static_cast<double>(cap))) {
    throw CapacityError("energy grid would need more than " + std::to_string(cap) + " points");
  }
  const auto steps = static_cast<std::size_t>(std::floor(span));
  std::vector<double> grid;
  grid.reserve(steps + 2);
  for (std::size_t i = 0; i <= steps; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  if (grid.back() < hi) grid.push_back(hi);
  return grid;
}

std::vector<Site> subcube_centers(const Cube& big, int L_sub) {
  if (L_sub < 0 || L_sub >= big.radius()) {
    throw PreconditionError("sub-cube radius must satisfy 0 <= L_sub < L");
  }
  return cube_sites(Cube(big.center(), big.radius() - L_sub));
}

// ---------------------------------------------------------------------------

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
  std::size_t c = 0;
  for (auto w : b) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

struct CliqueSearch {
  const std::vector<Bits>& adj;
  std::size_t cap;
  std::vector<std::size_t> best;
  std::vector<std::size_t> current;

  void run(const Bits& cand) {
    if (best.size() >= cap) return;
    if (current.size() > best.size()) best = current;
    if (current.size() + popcount(cand) <= best.size()) return;
    for (std::size_t w = 0; w < cand.size(); ++w) {
      std::uint64_t word = cand[w];
      while (word != 0) {
        const int bit = std::countr_zero(word);
        word &= word - 1;
        const std::size_t v = w * 64 + static_cast<std::size_t>(bit);
        // Only extend with vertices after v to enumerate each set once.
        Bits next(cand.size(), 0);
        for (std::size_t k = 0; k < cand.size(); ++k) next[k] = cand[k] & adj[v][k];
        for (std::size_t k = 0; k <= w; ++k) {
          if (k < w) {
            next[k] = 0;
          } else {
            const std::uint64_t keep = bit == 63 ? 0 : (~std::uint64_t{0} << (bit + 1));
            next[k] &= keep;
          }
        }
        current.push_back(v);
        run(next);
        current.pop_back();
        if (best.size() >= cap) return;
      }
    }
  }
};

}  // namespace

SeparatedFamily max_separated_family(std::span<const Site> centers, Coord separation) {
  SeparatedFamily fam;
  const std::size_t n = centers.size();
  if (n == 0) return fam;
  const std::size_t words = (n + 63) / 64;
  std::vector<Bits> adj(n, Bits(words, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sym_distance(centers[i], centers[j]) >= separation) {
        adj[i][j / 64] |= std::uint64_t{1} << (j % 64);
        adj[j][i / 64] |= std::uint64_t{1} << (i % 64);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (std::size_t m : fam.members) ok = ok && ((adj[i][m / 64] >> (m % 64)) & 1U);
    if (ok) fam.members.push_back(i);
  }
  constexpr std::size_t kExactCap = 5;
  if (fam.members.size() < kExactCap) {
    Bits all(words, ~std::uint64_t{0});
    if (n % 64 != 0) all.back() = (std::uint64_t{1} << (n % 64)) - 1;
    CliqueSearch search{adj, kExactCap, {}, {}};
    search.run(all);
    if (search.best.size() > fam.members.size()) fam.members = search.best;
  }
  fam.count = fam.members.size();
  fam.exact = fam.count < kExactCap;
  return fam;
}

SubcubeAtlas::SubcubeAtlas(const Cube& big, int L_sub, const FieldSample& field,
                           const InteractionSpec& interaction, const AssemblyOptions& opts)
    : L_sub_(L_sub), centers_(subcube_centers(big, L_sub)) {
  if (L_sub < 1) throw PreconditionError("NS predicates require L >= 1");
  AssemblyOptions inner = opts;
  inner.workers = 1;
  struct Built {
    SpectralDecomposition decomp;
    bool pi = false;
  };
  auto built = parallel::map_trials(centers_.size(), opts.workers, [&](std::size_t i) {
    const Cube sub(centers_[i], L_sub);
    Built b;
    b.decomp = diagonalize(assemble_hamiltonian(sub, field, interaction, inner));
    b.pi = classify_pi_fi(sub, interaction.r0).partially_interactive;
    return b;
  });
  decomps_.reserve(built.size());
  scanners_.reserve(built.size());
  for (std::size_t i = 0; i < built.size(); ++i) {
    decomps_.push_back(std::move(built[i].decomp));
    scanners_.emplace_back(Cube(centers_[i], L_sub), decomps_.back());
    pi_.push_back(built[i].pi);
  }
}

bool SubcubeAtlas::singular(std::size_t i, double E, const MsaParams& params) const {
  return !scanners_[i].verdict(E, params).is_ns;
}

SeparatedFamily count_singular_cubes(const SubcubeAtlas& atlas, double E, CubeKind kind,
                                     const MsaParams& params) {
  std::vector<Site> cand;
  std::vector<std::size_t> origin;
  for (std::size_t i = 0; i < atlas.centers().size(); ++i) {
    const bool pi = atlas.partially_interactive(i);
    if ((kind == CubeKind::PI) != pi) continue;
    if (!atlas.singular(i, E, params)) continue;
    cand.push_back(atlas.centers()[i]);
    origin.push_back(i);
  }
  SeparatedFamily fam = max_separated_family(cand, 2 * static_cast<Coord>(params.N) * atlas.sub_radius());
  for (auto& m : fam.members) m = origin[m];
  return fam;
}

SeparatedFamily count_singular_cubes(const Cube& big, const FieldSample& field, double E,
                                     CubeKind kind, int L_sub, const MsaParams& params,
                                     const InteractionSpec& interaction) {
  return count_singular_cubes(SubcubeAtlas(big, L_sub, field, interaction), E, kind, params);
}

TunnellingReport is_tunnelling(const SubcubeAtlas& atlas, std::span<const double> energies,
                               const MsaParams& params) {
  TunnellingReport rep;
  const auto& centers = atlas.centers();
  const Coord sep = 2 * static_cast<Coord>(params.N) * atlas.sub_radius();
  std::vector<std::pair<std::size_t, std::size_t>> far;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      if (sym_distance(centers[i], centers[j]) >= sep) far.emplace_back(i, j);
    }
  }
  if (far.empty()) return rep;
  std::vector<std::vector<SingularityVerdict>> verdicts;
  verdicts.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    verdicts.push_back(atlas.scanner(i).scan(energies, params));
  }
  for (std::size_t e = 0; e < energies.size(); ++e) {
    for (const auto& [i, j] : far) {
      if (!verdicts[i][e].is_ns && !verdicts[j][e].is_ns) {
        rep.tunnelling = true;
        rep.energy = energies[e];
        rep.witness = std::make_pair(i, j);
        return rep;
      }
    }
  }
  return rep;
}

TunnellingReport is_tunnelling(const Cube& big, const FieldSample& field,
                               std::span<const double> energies, int L_sub,
                               const MsaParams& params, const InteractionSpec& interaction) {
  return is_tunnelling(SubcubeAtlas(big, L_sub, field, interaction), energies, params);
}

// ---------------------------------------------------------------------------

double subharmonic_descent_bound(std::int64_t L, std::int64_t ell, double q, std::int64_t W_A) {
  if (W_A < 0 || W_A > L) throw PreconditionError("descent bound needs 0 <= W_A <= L");
  return subharmonic_descent_bound(L, ell, q, W_A, 0);
}

double subharmonic_descent_bound(std::int64_t L, std::int64_t ell, double q, std::int64_t W_A,
                                 std::int64_t r) {
  if (!(q > 0.0 && q <= 1.0)) throw PreconditionError("descent bound needs q in (0, 1]");
  if (ell < 1) throw PreconditionError("descent bound needs ell >= 1");
  if (W_A < 0) throw PreconditionError("descent bound needs W_A >= 0");
  const std::int64_t e = floor_div(L - r - W_A, ell) - 1;
  return std::pow(q, static_cast<double>(e));
}

SubharmonicReport verify_subharmonic_descent(const Cube& cube, std::span<const double> f,
                                             std::int64_t ell, double q,
                                             std::span<const Site> S, double c) {
  if (!(q > 0.0)) throw PreconditionError("subharmonicity needs q > 0");
  if (ell < 1) throw PreconditionError("subharmonicity needs ell >= 1");
  if (!(c >= 1.0)) throw PreconditionError("subharmonicity needs c >= 1");
  const CubeIndexer idx(cube);
  if (f.size() != idx.size()) throw PreconditionError("f must have one value per cube site");
  const int D = idx.flat_dim();
  const Coord L = cube.radius();
  const Coord side = idx.side();

  std::vector<bool> in_S(idx.size(), false);
  for (const Site& s : S) {
    if (!cube.contains(s)) throw PreconditionError("S must lie inside the cube");
    in_S[cube.index_of(s)] = true;
  }

  constexpr double kRelTol = 1e-12;
  SubharmonicReport rep;
  const auto sphere = shell_offsets(D, ell, ell);
  const Coord outer = static_cast<Coord>(std::floor((1.0 + c) * static_cast<double>(ell)));
  const auto ring = S.empty() ? std::vector<std::vector<Coord>>{} : shell_offsets(D, ell, outer);

  for (std::size_t i = 0; i < idx.size() && rep.subharmonic; ++i) {
    const bool special = in_S[i];
    if (!special) {
      bool inside = true;
      for (int k = 0; k < D; ++k) {
        const Coord o = idx.offset(i, k);
        inside = inside && o >= ell && o <= 2 * L - ell;
      }
      if (!inside) continue;
    }
    const auto& offsets = special ? ring : sphere;
    double mx = 0.0;
    for (const auto& delta : offsets) {
      std::int64_t j = 0;
      bool ok = true;
      for (int k = 0; k < D; ++k) {
        const Coord o = idx.offset(i, k) + delta[static_cast<std::size_t>(k)];
        if (o < 0 || o >= side) {
          ok = false;
          break;
        }
        j += o * static_cast<std::int64_t>(idx.stride(k));
      }
      if (ok) mx = std::max(mx, std::abs(f[static_cast<std::size_t>(j)]));
    }
    if (std::abs(f[i]) > q * mx * (1.0 + kRelTol)) {
      rep.subharmonic = false;
      rep.definition_violation = cube.site_at(i);
    }
  }

  // Annulus cover of the c*ell neighbourhood of S, in radii around the center.
  const Coord nb = static_cast<Coord>(std::floor(c * static_cast<double>(ell)));
  std::vector<std::pair<Coord, Coord>> spans;
  for (const Site& s : S) {
    const Coord r = max_norm_distance(s, cube.center());
    spans.emplace_back(std::max<Coord>(0, r - nb), std::min<Coord>(L, r + nb));
  }
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<Coord, Coord>> merged;
  for (const auto& sp : spans) {
    if (!merged.empty() && sp.first <= merged.back().second + 1) {
      merged.back().second = std::max(merged.back().second, sp.second);
    } else {
      merged.push_back(sp);
    }
  }
  bool center_covered = false;
  for (const auto& [lo, hi] : merged) {
    // C_b \ C_a holds the radii a < r <= b.
    const Coord a = std::max<Coord>(0, lo - 1);
    if (lo == 0) center_covered = true;
    const Coord b = std::max(hi, a + 1);
    rep.cover.push_back(Annulus{cube.center(), static_cast<int>(a), static_cast<int>(b)});
    rep.cover_width += b - a;
  }
  const Coord W = rep.cover_width;

  double M = 0.0;
  std::vector<double> radial(static_cast<std::size_t>(L) + 1, -1.0);
  std::vector<std::size_t> radial_arg(static_cast<std::size_t>(L) + 1, 0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double a = std::abs(f[i]);
    M = std::max(M, a);
    const auto r = static_cast<std::size_t>(radius_of(idx, i, L));
    if (a > radial[r]) {
      radial[r] = a;
      radial_arg[r] = i;
    }
  }
  rep.center_value = std::abs(f[cube.index_of(cube.center())]);

  if (center_covered || W > L) {
    rep.degenerate = true;
    rep.note = "degenerate cover: the annuli reach the center, the conclusion is vacuous";
    return rep;
  }
  const std::int64_t exponent = floor_div(L - W, ell) - 1;
  rep.center_bound = subharmonic_descent_bound(L, ell, std::min(q, 1.0), W) * M;
  if (exponent <= 0) {
    rep.degenerate = true;
    rep.note = "degenerate cover: exponent floor((L-W)/ell)-1 <= 0 gives no decay";
  }
  if (q > 1.0) return rep;

  // running = max |f| over C_r, grown one sphere at a time.
  double running = -1.0;
  std::size_t running_arg = 0;
  std::int64_t next_r = 0;
  const std::int64_t r_lo = W + ell;
  const std::int64_t r_hi = std::min<std::int64_t>(L, L - W + ell);
  for (std::int64_t r = r_lo; r <= r_hi; ++r) {
    for (; next_r <= r; ++next_r) {
      const auto k = static_cast<std::size_t>(next_r);
      if (radial[k] > running) {
        running = radial[k];
        running_arg = radial_arg[k];
      }
    }
    const double bound = subharmonic_descent_bound(L, ell, q, W, r) * M;
    if (running > bound * (1.0 + kRelTol)) {
      rep.conclusion_holds = false;
      rep.counterexample = cube.site_at(running_arg);
      rep.counterexample_radius = r;
      break;
    }
  }
  return rep;
}

}  // namespace mpa
