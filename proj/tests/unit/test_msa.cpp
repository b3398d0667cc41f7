#include <doctest.h>

#include <cmath>

#include "mpa/error.hpp"
#include "mpa/msa.hpp"

using namespace mpa;

namespace {
std::vector<Site> line_region(Coord lo, Coord hi) {
  std::vector<Site> out;
  for (Coord i = lo; i <= hi; ++i) out.push_back(Site::point({i}));
  return out;
}

MsaParams params_with_m(double m, int N = 1) {
  MsaParams p;
  p.m = m;
  p.N = N;
  return p;
}
}  // namespace

TEST_SUITE("msa") {
  TEST_CASE("gamma arithmetic") {
    CHECK(gamma(0.5, 16, 2, 2) == 0.75);
    CHECK(gamma(0.5, 16, 1, 2) == 1.125);
    CHECK(gamma(0.5, 256, 2, 2, GammaExponent::Eighth) == 0.75);
    double prev = gamma(1.0, 1, 1, 3);
    for (std::int64_t L : {2, 10, 100, 10'000, 1'000'000}) {
      const double g = gamma(1.0, L, 1, 3);
      CHECK(g < prev);
      CHECK(g > 1.0);
      prev = g;
    }
    CHECK(parse_gamma_exponent("eighth") == GammaExponent::Eighth);
    CHECK_THROWS_AS(parse_gamma_exponent("half"), ConfigError);
  }

  TEST_CASE("initial constants") {
    const auto c = initial_constants(2, 1, 100);
    CHECK(c.m == doctest::Approx(6.8).epsilon(1e-15));
    CHECK(c.E_star == doctest::Approx(1305.6).epsilon(1e-15));
    CHECK(c.C == 13056.0);
    // C L0^{-1/2} = E*
    CHECK(c.C / 10.0 == doctest::Approx(c.E_star));
  }

  TEST_CASE("resonance window") {
    Eigen::VectorXd ev(2);
    ev << 1.0, 3.0;
    CHECK(is_resonant(ev, 3.0, 16));
    CHECK_FALSE(is_resonant(ev, 1.1, 16));
    CHECK(is_resonant(ev, 1.1, 4));
    CHECK(resonance_width(16) == doctest::Approx(std::exp(-4.0)));
  }

  TEST_CASE("core radius and probability bounds") {
    CHECK(core_radius(1) == 1);
    CHECK(core_radius(8) == 4);
    CHECK(core_radius(27) == 9);
    CHECK(core_radius(26) == 8);
    CHECK(ds_bound(3, 1.0, 1, 1) == doctest::Approx(1.0 / 9.0));
    CHECK(ds_bound(3, 1.0, 1, 2) == doctest::Approx(1.0 / 81.0));
    CHECK(ds_bound_two_p(4, 0.5) == doctest::Approx(0.25));
  }

  TEST_CASE("energy grid") {
    const auto g = energy_grid(0.0, 1.0, 4);
    const double step = std::exp(-2.0) / 4.0;
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[1] == doctest::Approx(step));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] - g[i - 1] <= step * (1 + 1e-12));
    CHECK_THROWS_AS(energy_grid(0.0, 1000.0, 100, 1000), CapacityError);
  }

  TEST_CASE("eigenvalue energies are singular through resonance") {
    const Cube c(Site(1, {0}), 2);
    FieldSample f(line_region(-2, 2), {0.3, 1.0, 0.1, 0.7, 0.2});
    const auto H = assemble_hamiltonian(c, f, InteractionSpec::none());
    const auto dec = diagonalize(H);
    const auto v = is_ns(H, dec, dec.eigenvalues(2), params_with_m(0.5));
    CHECK_FALSE(v.is_ns);
    CHECK(v.resonant);
    CHECK_FALSE(v.observed_max.has_value());
    CHECK(v.to_json()["verdict"] == "S(resonant)");
  }

  TEST_CASE("one-site core at L = 1 covers the cube") {
    const Cube c(Site(1, {0}), 1);
    const auto H = assemble_laplacian(c);
    const SingularityScanner sc(c, diagonalize(H));
    CHECK(sc.core_size() == 3);
    CHECK(sc.boundary_size() == 2);
  }

  TEST_CASE("singularity scan matches direct Green entries") {
    DisorderSpec spec{Uniform{0.0, 5.0}, 3};
    const Cube c(Site(1, {0, 4}), 3);
    const auto H = assemble_hamiltonian(c, sample_field(spec, projection_region(c), 0),
                                        InteractionSpec{0, {1.0}});
    const auto dec = diagonalize(H);
    const SingularityScanner sc(c, dec);
    for (double E : {-0.4, 1.234, 7.9}) {
      if (is_resonant(dec, E, 3)) continue;
      const Eigen::MatrixXd inv = GreenSolver(H, E).inverse();
      double direct = 0.0;
      const auto bd = internal_boundary_indices(c);
      for (std::size_t x = 0; x < H.dim(); ++x) {
        if (max_norm_distance(c.site_at(x), c.center()) > core_radius(3)) continue;
        for (std::size_t y : bd) {
          direct = std::max(direct, std::abs(inv(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))));
        }
      }
      CHECK(sc.observed_max(E) == doctest::Approx(direct).epsilon(1e-9));
    }
    const std::vector<double> grid = energy_grid(0.0, 2.0, 3);
    const auto scanned = sc.scan(grid, params_with_m(0.3, 2));
    for (std::size_t i = 0; i < grid.size(); i += 7) {
      const auto one = sc.verdict(grid[i], params_with_m(0.3, 2));
      CHECK(one.is_ns == scanned[i].is_ns);
      CHECK(one.resonant == scanned[i].resonant);
    }
  }

  TEST_CASE("non-singularity is monotone in m") {
    DisorderSpec spec{Uniform{0.0, 8.0}, 77};
    for (std::uint64_t r = 0; r < 20; ++r) {
      const Cube c(Site(1, {0}), 3);
      const auto H = assemble_hamiltonian(c, sample_field(spec, projection_region(c), r), InteractionSpec::none());
      const auto dec = diagonalize(H);
      for (double E : {0.5, 3.0, 6.0}) {
        bool seen_singular = false;
        for (double m : {0.05, 0.2, 0.5, 1.0, 2.0}) {
          const bool ns = is_ns(H, dec, E, params_with_m(m)).is_ns;
          if (seen_singular) CHECK_FALSE(ns);
          seen_singular = seen_singular || !ns;
        }
      }
    }
  }

  TEST_CASE("sub-cube centers") {
    const auto c = subcube_centers(Cube(Site(1, {0}), 4), 1);
    CHECK(c.size() == 7);
    CHECK(c.front() == Site(1, {-3}));
    CHECK_THROWS(subcube_centers(Cube(Site(1, {0}), 2), 2));
  }

  TEST_CASE("separated families") {
    // two singular centers at the threshold distance 2 N L_sub and one below
    const Coord sep = 2 * 2 * 1;
    const std::vector<Site> at{Site(1, {0, 0}), Site(1, {sep, sep})};
    const std::vector<Site> below{Site(1, {0, 0}), Site(1, {sep - 1, sep - 1})};
    CHECK(max_separated_family(at, sep).count == 2);
    CHECK(max_separated_family(below, sep).count == 1);
    CHECK(max_separated_family(std::vector<Site>{}, sep).count == 0);
    CHECK(max_separated_family(std::vector<Site>{Site(1, {3, 3})}, sep).count == 1);
    // symmetrized distance: swapped coordinates are the same configuration
    const std::vector<Site> swapped{Site(1, {0, 10}), Site(1, {10, 0})};
    CHECK(max_separated_family(swapped, sep).count == 1);
    // evenly spaced at exactly the separation: all kept
    std::vector<Site> line;
    for (Coord x : {0, 2, 4, 6}) line.push_back(Site(1, {x}));
    const auto fam = max_separated_family(line, 2);
    CHECK(fam.count == 4);
    CHECK(fam.exact);
  }

  TEST_CASE("tunnelling") {
    const MsaParams p = params_with_m(0.5);
    // large uniform shift: every sub-cube is non-singular near 0
    const Cube big(Site(1, {0}), 8);
    FieldSample shifted(line_region(-8, 8), std::vector<double>(17, 1000.0));
    const auto grid = energy_grid(0.0, 0.5, 2);
    CHECK_FALSE(is_tunnelling(big, shifted, grid, 2, p, InteractionSpec::none()).tunnelling);
    CHECK(count_singular_cubes(big, shifted, 0.25, CubeKind::FI, 2, p, InteractionSpec::none()).count == 0);

    // planted double resonance: identical wells at both ends
    std::vector<double> v(17, 1000.0);
    const std::vector<double> well{0.4, 0.1, 0.9};
    for (int i = 0; i < 3; ++i) {
      v[static_cast<std::size_t>(i)] = well[static_cast<std::size_t>(i)];
      v[static_cast<std::size_t>(14 + i)] = well[static_cast<std::size_t>(i)];
    }
    FieldSample planted(line_region(-8, 8), v);
    const Cube left(Site(1, {-7}), 1);
    const auto Hl = assemble_hamiltonian(left, planted, InteractionSpec::none());
    const auto dec = diagonalize(Hl);
    const double E = dec.eigenvalues(0);
    CHECK_FALSE(is_ns(Hl, dec, E, p).is_ns);
    const Cube right(Site(1, {7}), 1);
    const auto Hr = assemble_hamiltonian(right, planted, InteractionSpec::none());
    CHECK_FALSE(is_ns(Hr, diagonalize(Hr), E, p).is_ns);
    const std::vector<double> energies{E};
    const auto rep = is_tunnelling(big, planted, energies, 1, p, InteractionSpec::none());
    CHECK(rep.tunnelling);
    CHECK(count_singular_cubes(big, planted, E, CubeKind::FI, 1, p, InteractionSpec::none()).count >= 2);
    CHECK(count_singular_cubes(big, planted, E, CubeKind::PI, 1, p, InteractionSpec::none()).count == 0);

    // too small to hold two sub-cubes 2 N L_sub = 4 apart
    const Cube tiny(Site(1, {0}), 2);
    FieldSample tf(line_region(-2, 2), {0.0, 0.0, 0.0, 0.0, 0.0});
    const auto g = energy_grid(0.0, 4.0, 1);
    CHECK_FALSE(is_tunnelling(tiny, tf, g, 1, params_with_m(0.5, 2), InteractionSpec::none()).tunnelling);
  }

  TEST_CASE("subharmonic descent factor") {
    CHECK(subharmonic_descent_bound(37, 4, 1.0, 3) == 1.0);
    CHECK(subharmonic_descent_bound(100, 10, 0.5, 0) == std::pow(0.5, 9));
    CHECK(subharmonic_descent_bound(10, 3, 0.5, 10) == 2.0);
    CHECK(subharmonic_descent_bound(100, 10, 0.5, 0, 20) == std::pow(0.5, 7));
  }

  TEST_CASE("extremal profile is subharmonic and meets the descent bound") {
    for (auto [L, ell, q] : {std::tuple{20, 2, 0.3}, std::tuple{30, 5, 0.7}}) {
      const Cube c(Site(1, {0}), L);
      std::vector<double> f;
      for (const auto& x : cube_sites(c)) {
        f.push_back(3.0 * std::pow(q, static_cast<double>(L - std::abs(x[0])) / ell));
      }
      const auto rep = verify_subharmonic_descent(c, f, ell, q, {}, 1.0);
      CHECK(rep.subharmonic);
      CHECK(rep.conclusion_holds);
      CHECK_FALSE(rep.degenerate);
      CHECK(rep.center_value <= rep.center_bound);
    }
  }

  TEST_CASE("constant profile is not subharmonic for q < 1") {
    const Cube c(Site(1, {0}), 6);
    const std::vector<double> f(13, 1.0);
    const auto rep = verify_subharmonic_descent(c, f, 2, 0.5, {}, 1.0);
    CHECK_FALSE(rep.subharmonic);
    CHECK(rep.definition_violation.has_value());
  }

  TEST_CASE("exceptional set covering the cube is degenerate") {
    const Cube c(Site(1, {0}), 6);
    const auto all = cube_sites(c);
    std::vector<double> f(13, 1.0);
    const auto rep = verify_subharmonic_descent(c, f, 2, 0.5, all, 1.0);
    CHECK(rep.degenerate);
    CHECK(rep.note.find("degenerate cover") != std::string::npos);
  }
}
