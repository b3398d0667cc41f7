#include "mpa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mpa/error.hpp"

namespace mpa {

void Dims::validate() const {
  if (d < 1) throw ConfigError("d must be >= 1, got " + std::to_string(d));
  if (n < 1) throw ConfigError("n must be >= 1, got " + std::to_string(n));
  if (N < n) throw ConfigError("N must satisfy N >= n (n=" + std::to_string(n) +
                               ", N=" + std::to_string(N) + ")");
}

Site::Site(int d, std::vector<Coord> coords) : d_(d), coords_(std::move(coords)) {
  if (d_ < 1 || coords_.empty() || coords_.size() % static_cast<std::size_t>(d_) != 0) {
    throw PreconditionError("site coordinates do not split into particles of dimension " +
                            std::to_string(d_));
  }
}

Site Site::origin(int d, int n) {
  return Site(d, std::vector<Coord>(static_cast<std::size_t>(d) * n, 0));
}

Site Site::point(std::vector<Coord> coords) {
  const int d = static_cast<int>(coords.size());
  return Site(d, std::move(coords));
}

Site Site::projection(int i) const {
  auto p = particle(i);
  return Site(d_, std::vector<Coord>(p.begin(), p.end()));
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  std::size_t h = static_cast<std::size_t>(s.d()) * 0x9E3779B97F4A7C15ULL;
  for (Coord c : s.coords()) {
    h ^= std::hash<Coord>{}(c) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

namespace {

void require_same_shape(const Site& x, const Site& y) {
  if (x.d() != y.d() || x.size() != y.size()) {
    throw PreconditionError("sites have different dimensions");
  }
}

}  // namespace

Coord max_norm_distance(const Site& x, const Site& y) {
  require_same_shape(x, y);
  Coord best = 0;
  for (std::size_t k = 0; k < x.size(); ++k) best = std::max(best, std::abs(x[k] - y[k]));
  return best;
}

Coord l1_distance(const Site& x, const Site& y) {
  require_same_shape(x, y);
  Coord sum = 0;
  for (std::size_t k = 0; k < x.size(); ++k) sum += std::abs(x[k] - y[k]);
  return sum;
}

Coord sym_distance(const Site& x, const Site& y) {
  require_same_shape(x, y);
  const int n = x.particles();
  const int d = x.d();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Coord best = std::numeric_limits<Coord>::max();
  do {
    Coord dist = 0;
    for (int i = 0; i < n && dist < best; ++i) {
      auto xi = x.particle(i);
      auto yi = y.particle(perm[static_cast<std::size_t>(i)]);
      for (int k = 0; k < d; ++k) dist = std::max(dist, std::abs(xi[k] - yi[k]));
    }
    best = std::min(best, dist);
  } while (best > 0 && std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---------------------------------------------------------------------------

Cube::Cube(Site center, int radius) : center_(std::move(center)), radius_(radius) {
  if (radius_ < 0) throw PreconditionError("cube radius must be nonnegative");
  if (center_.size() == 0) throw PreconditionError("cube center has no coordinates");
}

std::size_t Cube::cardinality() const {
  const auto s = static_cast<unsigned __int128>(side());
  unsigned __int128 total = 1;
  for (int k = 0; k < flat_dim(); ++k) {
    total *= s;
    if (total > std::numeric_limits<std::uint64_t>::max()) {
      throw CapacityError("cube too large: cardinality overflows 64 bits");
    }
  }
  return static_cast<std::size_t>(total);
}

bool Cube::contains(const Site& x) const {
  if (x.d() != center_.d() || x.size() != center_.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::abs(x[k] - center_[k]) > radius_) return false;
  }
  return true;
}

bool Cube::contains(const Cube& other) const {
  if (other.center_.size() != center_.size() || other.d() != d()) return false;
  for (std::size_t k = 0; k < center_.size(); ++k) {
    if (std::abs(other.center_[k] - center_[k]) + other.radius_ > radius_) return false;
  }
  return true;
}

std::size_t Cube::index_of(const Site& x) const {
  if (!contains(x)) throw PreconditionError("site lies outside the cube");
  std::size_t index = 0;
  const auto s = static_cast<std::size_t>(side());
  for (std::size_t k = 0; k < x.size(); ++k) {
    index = index * s + static_cast<std::size_t>(x[k] - center_[k] + radius_);
  }
  return index;
}

Site Cube::site_at(std::size_t index) const {
  std::vector<Coord> coords(center_.size());
  const auto s = static_cast<std::size_t>(side());
  for (std::size_t k = coords.size(); k-- > 0;) {
    coords[k] = center_[k] - radius_ + static_cast<Coord>(index % s);
    index /= s;
  }
  return Site(center_.d(), std::move(coords));
}

Cube Cube::projection(int i) const { return Cube(center_.projection(i), radius_); }

CubeIndexer::CubeIndexer(const Cube& cube, std::size_t cap) : side_(cube.side()) {
  size_ = cube.cardinality();
  if (size_ > cap) {
    throw CapacityError("cube too large: " + std::to_string(size_) + " sites exceeds cap " +
                        std::to_string(cap));
  }
  strides_.assign(static_cast<std::size_t>(cube.flat_dim()), 1);
  for (std::size_t k = strides_.size(); k-- > 1;) {
    strides_[k - 1] = strides_[k] * static_cast<std::size_t>(side_);
  }
}

std::vector<Site> cube_sites(const Cube& cube, std::size_t cap) {
  CubeIndexer idx(cube, cap);
  std::vector<Site> sites;
  sites.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) sites.push_back(cube.site_at(i));
  return sites;
}

std::vector<std::size_t> internal_boundary_indices(const Cube& cube, std::size_t cap) {
  CubeIndexer idx(cube, cap);
  std::vector<std::size_t> out;
  if (cube.radius() == 0) return out;
  const Coord last = idx.side() - 1;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int k = 0; k < idx.flat_dim(); ++k) {
      const Coord o = idx.offset(i, k);
      if (o == 0 || o == last) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<Site> internal_boundary(const Cube& cube, std::size_t cap) {
  std::vector<Site> out;
  for (std::size_t i : internal_boundary_indices(cube, cap)) out.push_back(cube.site_at(i));
  return out;
}

std::vector<Site> external_boundary(const Cube& cube, std::size_t cap) {
  std::vector<Site> out;
  for (auto& edge : boundary_edge_pairs(cube, cap)) out.push_back(std::move(edge.second));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::pair<Site, Site>> boundary_edge_pairs(const Cube& cube, std::size_t cap) {
  CubeIndexer idx(cube, cap);
  std::vector<std::pair<Site, Site>> out;
  const Coord last = idx.side() - 1;
  const Coord L = cube.radius();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    bool on_face = false;
    for (int k = 0; k < idx.flat_dim() && !on_face; ++k) {
      const Coord o = idx.offset(i, k);
      on_face = (o == 0 || o == last);
    }
    if (!on_face) continue;
    const Site v = cube.site_at(i);
    // Outward steps in coordinate order, lower side first: keeps v' lexicographic per v.
    std::vector<Site> outside;
    for (int k = 0; k < idx.flat_dim(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const Coord rel = v[kk] - cube.center()[kk];
      for (Coord step : {Coord{-1}, Coord{1}}) {
        if (std::abs(rel + step) > L) {
          auto c = v.coords();
          c[kk] += step;
          outside.emplace_back(v.d(), std::move(c));
        }
      }
    }
    std::sort(outside.begin(), outside.end());
    for (auto& w : outside) out.emplace_back(v, std::move(w));
  }
  return out;
}

void Annulus::validate() const {
  if (inner < 0 || inner >= outer) {
    throw PreconditionError("annulus requires 0 <= inner < outer");
  }
}

bool Annulus::contains(const Site& x) const {
  const Coord r = max_norm_distance(x, center);
  return r > inner && r <= outer;
}

// ---------------------------------------------------------------------------

std::uint64_t isqrt(unsigned __int128 v) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(v)));
  auto sq = [](std::uint64_t a) { return static_cast<unsigned __int128>(a) * a; };
  while (r > 0 && sq(r) > v) --r;
  while (sq(r + 1) <= v) ++r;
  return r;
}

std::uint64_t icbrt(std::uint64_t v) {
  auto r = static_cast<std::uint64_t>(std::cbrt(static_cast<long double>(v)));
  auto cube = [](std::uint64_t a) { return static_cast<unsigned __int128>(a) * a * a; };
  while (r > 0 && cube(r) > v) --r;
  while (cube(r + 1) <= v) ++r;
  return r;
}

std::int64_t floor_pow_three_halves(std::int64_t L) {
  if (L < 0) throw PreconditionError("scale must be nonnegative");
  if (L >= (std::int64_t{1} << 42)) throw CapacityError("scale too deep: L^{3/2} exceeds 2^63");
  const auto l = static_cast<unsigned __int128>(L);
  return static_cast<std::int64_t>(isqrt(l * l * l));
}

ScaleSequence::ScaleSequence(std::int64_t L0) : L0_(L0) {
  if (L0_ < 3) throw ConfigError("initial scale L0 must be >= 3");
}

std::int64_t ScaleSequence::at(int k) const {
  if (k < 0) throw PreconditionError("scale index must be nonnegative");
  std::int64_t L = L0_;
  for (int j = 0; j < k; ++j) L = floor_pow_three_halves(L) + 1;
  return L;
}

// ---------------------------------------------------------------------------

Coord projection_gap(std::span<const Coord> a, std::span<const Coord> b, int L) {
  Coord gap = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    gap = std::max(gap, std::abs(a[k] - b[k]) - 2 * static_cast<Coord>(L));
  }
  return gap;
}

PiFiVerdict classify_pi_fi(const Cube& cube, int r0) {
  const int n = cube.particles();
  if (n < 2) return {};
  const Site& u = cube.center();
  const Coord need = 2 * static_cast<Coord>(cube.radius()) + r0;

  // Witness groups J contain particle 0 and miss at least one particle.
  std::vector<std::vector<int>> groups;
  const unsigned full = (1u << (n - 1)) - 1;
  for (unsigned mask = 0; mask < full; ++mask) {
    std::vector<int> group{0};
    for (int i = 1; i < n; ++i) {
      if (mask & (1u << (i - 1))) group.push_back(i);
    }
    groups.push_back(std::move(group));
  }
  std::sort(groups.begin(), groups.end());

  for (const auto& group : groups) {
    std::vector<bool> in_group(static_cast<std::size_t>(n), false);
    for (int i : group) in_group[static_cast<std::size_t>(i)] = true;
    bool separated = true;
    for (int i = 0; i < n && separated; ++i) {
      if (!in_group[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < n && separated; ++j) {
        if (in_group[static_cast<std::size_t>(j)]) continue;
        separated = projection_gap(u.particle(i), u.particle(j), cube.radius()) >= need;
      }
    }
    if (separated) return {true, group};
  }
  return {};
}

}  // namespace mpa
