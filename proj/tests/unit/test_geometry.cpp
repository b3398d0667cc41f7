#include <doctest.h>

#include <algorithm>
#include <set>

#include "mpa/error.hpp"
#include "mpa/geometry.hpp"
#include "oracles.hpp"

using namespace mpa;

namespace {
Site s1(Coord a) { return Site(1, {a}); }
Site s2(Coord a, Coord b) { return Site(1, {a, b}); }
}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("cube enumeration is lexicographic") {
    const auto one = cube_sites(Cube(s1(0), 1));
    REQUIRE(one.size() == 3);
    CHECK(one[0] == s1(-1));
    CHECK(one[1] == s1(0));
    CHECK(one[2] == s1(1));

    const auto two = cube_sites(Cube(s2(0, 0), 1));
    REQUIRE(two.size() == 9);
    CHECK(two.front() == s2(-1, -1));
    CHECK(two.back() == s2(1, 1));

    const auto pt = cube_sites(Cube(Site(2, {0, 0}), 0));
    REQUIRE(pt.size() == 1);
    CHECK(pt[0] == Site(2, {0, 0}));
  }

  TEST_CASE("enumeration matches the brute-force oracle and index_of inverts it") {
    for (const Cube& c : {Cube(Site(1, {3, -2, 5}), 2), Cube(Site(2, {0, 1, -1, 4}), 1)}) {
      const auto sites = cube_sites(c);
      CHECK(sites == oracle::enumerate(c));
      CHECK(sites.size() == c.cardinality());
      for (std::size_t i = 0; i < sites.size(); ++i) {
        CHECK(c.index_of(sites[i]) == i);
        CHECK(c.site_at(i) == sites[i]);
        CHECK(c.contains(sites[i]));
      }
    }
  }

  TEST_CASE("site cap raises a capacity error") {
    CHECK_THROWS_AS(cube_sites(Cube(Site(1, {0, 0, 0}), 10), 1000), CapacityError);
  }

  TEST_CASE("internal boundary") {
    auto ib = internal_boundary(Cube(s1(0), 1));
    CHECK(ib == std::vector<Site>{s1(-1), s1(1)});
    ib = internal_boundary(Cube(s2(0, 0), 1));
    CHECK(ib.size() == 8);
    CHECK(std::find(ib.begin(), ib.end(), s2(0, 0)) == ib.end());
    CHECK(internal_boundary(Cube(s2(4, 4), 0)).empty());
  }

  TEST_CASE("external boundary") {
    CHECK(external_boundary(Cube(s1(0), 1)) == std::vector<Site>{s1(-2), s1(2)});
    CHECK(external_boundary(Cube(s1(0), 0)) == std::vector<Site>{s1(-1), s1(1)});
    const Cube sq(Site(2, {0, 0}), 1);
    const auto eb = external_boundary(sq);
    std::vector<Site> brute;
    for (const auto& w : oracle::enumerate(Cube(Site(2, {0, 0}), 2))) {
      if (sq.contains(w)) continue;
      for (const auto& v : oracle::enumerate(sq)) {
        if (l1_distance(v, w) == 1) {
          brute.push_back(w);
          break;
        }
      }
    }
    CHECK(eb == brute);
    CHECK(eb.size() == 12);
    for (const auto& v : eb) {
      CHECK(max_norm_distance(v, Site(2, {0, 0})) == 2);
      // no corner extensions such as (2, 2)
      CHECK((std::abs(v[0]) <= 1 || std::abs(v[1]) <= 1));
    }
  }

  TEST_CASE("boundary edge pairs") {
    const auto e = boundary_edge_pairs(Cube(s1(0), 1));
    REQUIRE(e.size() == 2);
    CHECK(e[0] == std::make_pair(s1(-1), s1(-2)));
    CHECK(e[1] == std::make_pair(s1(1), s1(2)));
    const auto e0 = boundary_edge_pairs(Cube(s1(0), 0));
    REQUIRE(e0.size() == 2);
    CHECK(e0[0] == std::make_pair(s1(0), s1(-1)));
    CHECK(e0[1] == std::make_pair(s1(0), s1(1)));

    // brute force: every (inside, outside) pair at l1 distance 1
    const Cube c(s2(0, 0), 1);
    std::size_t count = 0;
    for (const auto& v : oracle::enumerate(c)) {
      for (const auto& w : oracle::enumerate(Cube(s2(0, 0), 2))) {
        if (!c.contains(w) && l1_distance(v, w) == 1) ++count;
      }
    }
    CHECK(count == 12);
    CHECK(boundary_edge_pairs(c).size() == 12);
  }

  TEST_CASE("symmetrized distance") {
    CHECK(sym_distance(s2(0, 5), s2(5, 0)) == 0);
    CHECK(sym_distance(s2(0, 0), s2(3, 4)) == 4);
    const Site x(1, {1, 7, -2}), y(1, {-2, 2, 6});
    Coord best = max_norm_distance(x, y);
    std::vector<int> perm{0, 1, 2};
    do {
      Site py(1, {y[perm[0]], y[perm[1]], y[perm[2]]});
      best = std::min(best, max_norm_distance(x, py));
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(sym_distance(x, y) == best);
    CHECK(sym_distance(x, y) <= max_norm_distance(x, y));
  }

  TEST_CASE("scale sequence") {
    const ScaleSequence seq(3);
    CHECK(seq.at(0) == 3);
    CHECK(seq.at(1) == 6);
    CHECK(seq.at(2) == 15);
    CHECK(seq.at(3) == 59);
    CHECK_THROWS_AS(seq.at(20), CapacityError);
    for (std::int64_t L = 0; L < 2000; ++L) {
      const auto f = floor_pow_three_halves(L);
      CHECK(f * f <= L * L * L);
      CHECK((f + 1) * (f + 1) > L * L * L);
    }
    CHECK(icbrt(27) == 3);
    CHECK(icbrt(26) == 2);
    CHECK(isqrt(static_cast<unsigned __int128>(1) << 100) == (std::uint64_t{1} << 50));
  }

  TEST_CASE("partially and fully interactive cubes") {
    CHECK(classify_pi_fi(Cube(s2(0, 10), 2), 1).partially_interactive);
    CHECK_FALSE(classify_pi_fi(Cube(s2(0, 3), 2), 1).partially_interactive);
    CHECK_FALSE(classify_pi_fi(Cube(s1(0), 2), 1).partially_interactive);
    // threshold: gap 2L + r0 exactly is PI
    CHECK(classify_pi_fi(Cube(s2(0, 9), 2), 1).partially_interactive);
    CHECK_FALSE(classify_pi_fi(Cube(s2(0, 8), 2), 1).partially_interactive);
  }

  TEST_CASE("invalid dims rejected") {
    Dims d{1, 3, 2};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    Dims ok{2, 2, 3};
    CHECK_NOTHROW(ok.validate());
  }
}
