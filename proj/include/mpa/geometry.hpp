#pragma once

// Lattice index arithmetic for n-particle cubes in Z^{nd}.
//
// A point x = (x_1, ..., x_n) with x_i in Z^d is stored flattened: particle i
// owns coordinates [i*d, (i+1)*d). Cubes are max-norm balls; boundaries use
// graph (l1) adjacency. Site enumeration is row-major lexicographic over the
// flattened coordinates and doubles as the matrix index map.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mpa {

using Coord = std::int64_t;

/// Default refusal threshold for enumerating cube sites.
inline constexpr std::size_t kDefaultSiteCap = 200'000;

struct Dims {
  int d = 1;  // single-particle dimension
  int n = 1;  // particles in this subsystem
  int N = 1;  // total particle cap

  void validate() const;
  int flat() const { return n * d; }
};

class Site {
 public:
  Site() = default;
  Site(int d, std::vector<Coord> coords);
  static Site origin(int d, int n);
  /// Single-particle point.
  static Site point(std::vector<Coord> coords);

  int d() const { return d_; }
  int particles() const { return d_ == 0 ? 0 : static_cast<int>(coords_.size()) / d_; }
  std::size_t size() const { return coords_.size(); }
  const std::vector<Coord>& coords() const { return coords_; }
  Coord operator[](std::size_t k) const { return coords_[k]; }

  std::span<const Coord> particle(int i) const {
    return {coords_.data() + static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_)};
  }
  /// Single-particle site x_i.
  Site projection(int i) const;

  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;

 private:
  int d_ = 0;
  std::vector<Coord> coords_;
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

Coord max_norm_distance(const Site& x, const Site& y);
Coord l1_distance(const Site& x, const Site& y);

/// Symmetrized distance: min over particle permutations tau of |x - tau y|.
Coord sym_distance(const Site& x, const Site& y);

/// C_L(u) = { x : |x - u| <= L } in max-norm over all nd coordinates.
class Cube {
 public:
  Cube() = default;
  Cube(Site center, int radius);

  const Site& center() const { return center_; }
  int radius() const { return radius_; }
  int d() const { return center_.d(); }
  int particles() const { return center_.particles(); }
  int flat_dim() const { return static_cast<int>(center_.size()); }
  Coord side() const { return 2 * static_cast<Coord>(radius_) + 1; }

  /// (2L+1)^{nd}; throws CapacityError on 64-bit overflow.
  std::size_t cardinality() const;
  bool contains(const Site& x) const;
  bool contains(const Cube& other) const;

  /// Row-major lexicographic position of x; x must lie in the cube.
  std::size_t index_of(const Site& x) const;
  Site site_at(std::size_t index) const;

  /// Single-particle cube C_L(u_i).
  Cube projection(int i) const;

  bool operator==(const Cube&) const = default;

 private:
  Site center_;
  int radius_ = 0;
};

/// Mixed-radix helper for tight loops over a cube without materialising Sites.
class CubeIndexer {
 public:
  explicit CubeIndexer(const Cube& cube, std::size_t cap = kDefaultSiteCap);

  std::size_t size() const { return size_; }
  int flat_dim() const { return static_cast<int>(strides_.size()); }
  std::size_t stride(int k) const { return strides_[static_cast<std::size_t>(k)]; }
  Coord side() const { return side_; }
  /// Offset from the cube corner (0..2L) of coordinate k at a flat index.
  Coord offset(std::size_t index, int k) const {
    return static_cast<Coord>((index / strides_[static_cast<std::size_t>(k)]) %
                              static_cast<std::size_t>(side_));
  }

 private:
  std::size_t size_ = 0;
  Coord side_ = 1;
  std::vector<std::size_t> strides_;
};

/// All sites, lexicographically ordered. Throws CapacityError beyond `cap`.
std::vector<Site> cube_sites(const Cube& cube, std::size_t cap = kDefaultSiteCap);

/// Sites of the cube adjacent (l1 distance 1) to its complement; empty for L = 0.
std::vector<Site> internal_boundary(const Cube& cube, std::size_t cap = kDefaultSiteCap);
std::vector<std::size_t> internal_boundary_indices(const Cube& cube,
                                                   std::size_t cap = kDefaultSiteCap);

/// Sites outside the cube adjacent (l1 distance 1) to it, lexicographically ordered.
std::vector<Site> external_boundary(const Cube& cube, std::size_t cap = kDefaultSiteCap);

/// Ordered pairs (v inside, v' outside) with |v - v'|_1 = 1.
std::vector<std::pair<Site, Site>> boundary_edge_pairs(const Cube& cube,
                                                       std::size_t cap = kDefaultSiteCap);

/// C_b(u) \ C_a(u), 0 <= a < b.
struct Annulus {
  Site center;
  int inner = 0;
  int outer = 1;

  void validate() const;
  int width() const { return outer - inner; }
  bool contains(const Site& x) const;
};

/// L_{k+1} = floor(L_k^{3/2}) + 1 evaluated in exact integer arithmetic.
class ScaleSequence {
 public:
  explicit ScaleSequence(std::int64_t L0);

  std::int64_t L0() const { return L0_; }
  /// Throws CapacityError ("scale too deep") once L_k would pass 2^63.
  std::int64_t at(int k) const;

 private:
  std::int64_t L0_;
};

inline std::int64_t scale_at(const ScaleSequence& seq, int k) { return seq.at(k); }

/// Exact floor(sqrt(v)).
std::uint64_t isqrt(unsigned __int128 v);
/// Exact floor(cbrt(v)).
std::uint64_t icbrt(std::uint64_t v);
/// floor(L^{3/2}) without rounding error.
std::int64_t floor_pow_three_halves(std::int64_t L);

/// Max-norm gap between single-particle cubes C_L(a) and C_L(b).
Coord projection_gap(std::span<const Coord> a, std::span<const Coord> b, int L);

struct PiFiVerdict {
  bool partially_interactive = false;
  /// Particle indices of the witness group J (contains particle 0); empty for FI.
  std::vector<int> group;
};

/// PI iff some bipartition (J, J^c) has all cross projection gaps >= 2L + r0.
/// Among witnesses, the lexicographically smallest sorted J (containing
/// particle 0) is reported. One-particle cubes are FI.
PiFiVerdict classify_pi_fi(const Cube& cube, int r0);

}  // namespace mpa

template <>
struct std::hash<mpa::Site> : mpa::SiteHash {};
