#include <doctest.h>

#include <cmath>

#include "mpa/ensemble.hpp"
#include "mpa/error.hpp"

using namespace mpa;

TEST_SUITE("ensemble") {
  TEST_CASE("Clopper-Pearson interval") {
    auto [lo, hi] = clopper_pearson(0, 10);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(1.0 - std::pow(0.025, 0.1)).epsilon(1e-10));
    std::tie(lo, hi) = clopper_pearson(10, 10);
    CHECK(hi == 1.0);
    CHECK(lo == doctest::Approx(std::pow(0.025, 0.1)).epsilon(1e-10));
    std::tie(lo, hi) = clopper_pearson(50, 100);
    CHECK(lo < 0.5);
    CHECK(hi > 0.5);
    CHECK((hi - 0.5) == doctest::Approx(0.5 - lo).epsilon(1e-10));
    const auto est = ProbabilityEstimate::from_counts("e", 3, 12);
    CHECK(est.p_hat == 0.25);
  }

  TEST_CASE("KS statistic and regression") {
    CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_statistic({1, 2}, {3, 4}) == 1.0);
    CHECK(ks_critical_1pct(100, 100) == doctest::Approx(1.628 * std::sqrt(0.02)));
    const std::vector<double> x{0, 1, 2, 3, 4};
    const std::vector<double> y{1, -1, -3, -5, -7};
    const auto fit = linear_regression(x, y);
    CHECK(fit.slope == doctest::Approx(-2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  }

  TEST_CASE("Wegner experiment is monotone and worker independent") {
    WegnerConfig cfg;
    cfg.dims = Dims{1, 1, 1};
    cfg.u = Site(1, {0});
    cfg.v = Site(1, {20});
    cfg.disorder = DisorderSpec{Gaussian{0.0, 1.0}, 5};
    cfg.s_grid = {0.0, 0.01, 0.05};
    cfg.trials = 500;
    cfg.modulus_trials = 0;
    const auto serial = wegner_experiment(cfg);
    cfg.workers = 4;
    const auto parallel = wegner_experiment(cfg);
    CHECK(serial.monotone);
    CHECK(serial.points[0].estimate.successes == 0);
    CHECK(serial.zero_distance_events == 0);
    CHECK(serial.card1 == 5);
    CHECK(serial.region_size == 5);
    REQUIRE(serial.points.size() == parallel.points.size());
    for (std::size_t i = 0; i < serial.points.size(); ++i) {
      CHECK(serial.points[i].estimate.successes == parallel.points[i].estimate.successes);
    }
    CHECK(serial.min_distances == parallel.min_distances);
    REQUIRE(serial.points[2].bound_closed_form.has_value());
    CHECK(*serial.points[2].bound_closed_form ==
          doctest::Approx(25.0 * 0.1 * std::sqrt(5.0) / std::sqrt(2.0 * M_PI)));
    cfg.v = Site(1, {3});
    CHECK_THROWS_AS(wegner_experiment(cfg), PreconditionError);
  }

  TEST_CASE("Lifshitz probability") {
    LifshitzConfig cfg;
    cfg.dims = Dims{1, 1, 1};
    cfg.L0 = 16;
    cfg.disorder = DisorderSpec{Constant{0.0}, 0};
    cfg.trials = 20;
    const auto res = lifshitz_experiment(cfg);
    CHECK(res.threshold == 0.5);
    CHECK(res.estimate.p_hat == 1.0);
    cfg.disorder = DisorderSpec{Gaussian{0.0, 1.0}, 0};
    CHECK_THROWS_AS(lifshitz_experiment(cfg), PreconditionError);
    cfg.disorder = DisorderSpec{Constant{5.0}, 0};
    CHECK(lifshitz_experiment(cfg).estimate.p_hat == 0.0);
  }

  TEST_CASE("two-cube singularity with m = 0 is resonance only") {
    SingularityConfig cfg;
    cfg.dims = Dims{1, 1, 1};
    cfg.L = 2;
    cfg.u = Site(1, {0});
    cfg.v = Site(1, {10});
    cfg.disorder = DisorderSpec{Uniform{0.0, 4.0}, 1};
    cfg.params.m = 0.0;
    cfg.params.E_star = 10.0;
    cfg.trials = 30;
    const auto res = singularity_probability(cfg);
    // threshold e^0 = 1: resonance still decides some events, large entries near
    // the spectrum decide the rest
    CHECK(res.estimate.successes >= res.resonant_events);
    CHECK(res.resonant_events > 0);
    CHECK(res.clipped);
    cfg.workers = 3;
    CHECK(singularity_probability(cfg).estimate.successes == res.estimate.successes);
    const Cube c(Site(1, {0}), 2);
    const auto H = assemble_laplacian(c);
    CHECK(is_ns(H, diagonalize(H), -1.0, cfg.params).threshold == 1.0);
  }

  TEST_CASE("centers of localization") {
    const Cube c(Site(1, {0}), 2);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(5);
    delta(3) = 1.0;
    CHECK(center_of_localization(c, delta) == Site(1, {1}));
    Eigen::VectorXd tie = Eigen::VectorXd::Zero(5);
    tie(0) = 0.5;
    tie(4) = -0.5;
    CHECK(center_of_localization(c, tie) == Site(1, {-2}));
    tie(2) = 0.5;
    CHECK(center_of_localization(c, tie) == Site(1, {0}));

    // a deep well localizes the ground state on the well
    std::vector<Site> region;
    for (Coord i = -2; i <= 2; ++i) region.push_back(Site::point({i}));
    FieldSample well(region, {5.0, 5.0, 5.0, -20.0, 5.0});
    const auto dec = diagonalize(assemble_hamiltonian(c, well, InteractionSpec::none()));
    CHECK(centers_of_localization(c, dec)[0] == Site(1, {1}));
  }

  TEST_CASE("decay fit recovers an exponential profile") {
    const Cube c(Site(1, {0}), 6);
    Eigen::VectorXd psi(13);
    for (int i = 0; i < 13; ++i) psi(i) = std::exp(-0.7 * std::abs(i - 6));
    const auto fit = fit_decay(c, psi, Site(1, {0}));
    CHECK_FALSE(fit.skipped.has_value());
    CHECK(fit.mass() == doctest::Approx(0.7));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK_FALSE(fit.delocalized);
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(13, 0.3);
    const auto fl = fit_decay(c, flat, Site(1, {0}));
    CHECK(fl.delocalized);
    const auto few = fit_decay(Cube(Site(1, {0}), 2), Eigen::VectorXd::Ones(5), Site(1, {0}));
    CHECK(few.skipped.has_value());
  }

  TEST_CASE("correlators") {
    DisorderSpec spec{Gaussian{0.0, 1.0}, 2};
    const Cube c(Site(1, {0, 0}), 2);
    const auto dec = diagonalize(assemble_hamiltonian(c, sample_field(spec, projection_region(c), 0),
                                                      InteractionSpec::none()));
    const std::pair<double, double> all{dec.eigenvalues.minCoeff() - 1, dec.eigenvalues.maxCoeff() + 1};
    const auto Q = correlator_matrix(dec, all);
    for (Eigen::Index x = 0; x < Q.rows(); ++x) CHECK(std::abs(Q(x, x) - 1.0) < 1e-9);
    const auto t = correlator_table(dec, {100.0, 200.0}, 3);
    CHECK(t.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.eigenvalues_in_interval == 0);
    const auto col = correlator_table(dec, all, 7);
    CHECK((col.values - Q.col(7)).cwiseAbs().maxCoeff() < 1e-12);

    const std::vector<std::size_t> K{12};
    CHECK(dynamical_moment(c, dec, {100.0, 200.0}, 1.0, K).moment == 0.0);
    const auto m0 = dynamical_moment(c, dec, all, 0.0, K);
    CHECK(m0.moment <= static_cast<double>(m0.trace_count * dec.dim()));
    const auto tr = dynamical_moment(c, dec, all, 1.0, K, std::make_pair(1.0, 0.5), 2);
    REQUIRE(tr.trace_event.has_value());
    CHECK(*tr.trace_event == (25.0 >= std::pow(2.0, 0.5 * 2 * 1)));
  }
}
