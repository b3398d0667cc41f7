#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpa/disorder.hpp"
#include "mpa/error.hpp"

using namespace mpa;

namespace {
std::vector<Site> line(Coord n) {
  std::vector<Site> out;
  for (Coord i = 0; i < n; ++i) out.push_back(Site::point({i}));
  return out;
}
}  // namespace

TEST_SUITE("disorder") {
  TEST_CASE("sampling is deterministic and order independent") {
    DisorderSpec spec{Gaussian{0.0, 1.0}, 42};
    const auto a = sample_field(spec, line(50), 3);
    const auto b = sample_field(spec, line(50), 3);
    CHECK(a.values() == b.values());
    auto rev = line(50);
    std::reverse(rev.begin(), rev.end());
    const auto c = sample_field(spec, rev, 3);
    for (const auto& x : line(50)) CHECK(c.at(x) == a.at(x));
    const auto other = sample_field(spec, line(50), 4);
    CHECK(other.values() != a.values());
  }

  TEST_CASE("uniform sample mean") {
    DisorderSpec spec{Uniform{0.0, 1.0}, 1};
    const auto f = sample_field(spec, line(10'000), 0);
    const double mean = std::accumulate(f.values().begin(), f.values().end(), 0.0) / 1e4;
    CHECK(std::abs(mean - 0.5) <= 0.02);
    for (double v : f.values()) CHECK((v > 0.0 && v < 1.0));
  }

  TEST_CASE("bernoulli frequency") {
    DisorderSpec spec{Bernoulli{0.5, 1.0}, 9};
    const auto f = sample_field(spec, line(10'000), 0);
    const double ones = static_cast<double>(std::count(f.values().begin(), f.values().end(), 1.0));
    CHECK(ones / 1e4 >= 0.47);
    CHECK(ones / 1e4 <= 0.53);
    for (double v : f.values()) CHECK((v == 0.0 || v == 1.0));
  }

  TEST_CASE("gaussian moments") {
    DisorderSpec spec{Gaussian{2.0, 3.0}, 5};
    const auto f = sample_field(spec, line(20'000), 0);
    const double n = 2e4;
    const double mean = std::accumulate(f.values().begin(), f.values().end(), 0.0) / n;
    double var = 0.0;
    for (double v : f.values()) var += (v - mean) * (v - mean);
    var /= n - 1;
    CHECK(std::abs(mean - 2.0) < 4 * 3.0 / std::sqrt(n));
    CHECK(std::abs(var - 9.0) < 0.5);
  }

  TEST_CASE("invalid laws rejected") {
    CHECK_THROWS_AS((DisorderSpec{Gaussian{0.0, 0.0}, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((DisorderSpec{Uniform{1.0, 1.0}, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((DisorderSpec{Bernoulli{1.0, 1.0}, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((DisorderSpec{Bernoulli{0.5, -1.0}, 0}.validate()), ConfigError);
  }

  TEST_CASE("mean and fluctuation split") {
    auto dec = decompose(FieldSample(line(3), {1.0, 2.0, 3.0}));
    CHECK(dec.mean == doctest::Approx(2.0));
    CHECK(dec.fluct == std::vector<double>{-1.0, 0.0, 1.0});
    dec = decompose(FieldSample(line(4), {7.5, 7.5, 7.5, 7.5}));
    CHECK(dec.mean == 7.5);
    for (double e : dec.fluct) CHECK(e == 0.0);
    dec = decompose(FieldSample(line(2), {0.0, 1.0}));
    CHECK(dec.mean == 0.5);
    CHECK(dec.fluct == std::vector<double>{-0.5, 0.5});

    DisorderSpec spec{Gaussian{0.0, 1.0}, 3};
    const auto f = sample_field(spec, line(37), 0);
    dec = decompose(f);
    const double sum = std::accumulate(dec.fluct.begin(), dec.fluct.end(), 0.0);
    double vmax = 0.0;
    for (double v : f.values()) vmax = std::max(vmax, std::abs(v));
    CHECK(std::abs(sum) <= 1e-12 * 37 * vmax);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(dec.mean + dec.fluct[i] == doctest::Approx(f.values()[i]));
  }

  TEST_CASE("conditional resampling keeps fluctuations") {
    DisorderSpec spec{Gaussian{1.0, 2.0}, 11};
    const auto f = sample_field(spec, line(8), 0);
    const auto g = resample_mean_conditional(f, spec, 1);
    const auto df = decompose(f), dg = decompose(g);
    CHECK(dg.mean != df.mean);
    for (std::size_t i = 0; i < 8; ++i) CHECK(dg.fluct[i] == doctest::Approx(df.fluct[i]).epsilon(1e-9));

    const auto single = sample_field(spec, line(1), 0);
    CHECK(decompose(single).fluct[0] == 0.0);
    CHECK(resample_mean_conditional(single, spec, 2).values()[0] != single.values()[0]);

    DisorderSpec uni{Uniform{0.0, 1.0}, 0};
    CHECK_THROWS(resample_mean_conditional(sample_field(uni, line(3), 0), uni, 1));
  }

  TEST_CASE("modulus estimate") {
    DisorderSpec spec{Gaussian{0.0, 1.0}, 21};
    const std::vector<double> t{0.01, 0.05, 0.2, 1.0, 100.0};
    const auto est = estimate_modulus(spec, line(5), t, 2000);
    REQUIRE(est.nu_hat.size() == t.size());
    CHECK(std::is_sorted(est.nu_hat.begin(), est.nu_hat.end()));
    for (double v : est.nu_hat) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(est.nu_hat.back() == 1.0);
    // the closed form is the exact sup for gaussian means; the estimate lies within DKW slack
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(est.nu_hat[i] <= gaussian_mean_modulus(t[i], 5, 1.0) + 2 * est.dkw_halfwidth);
    }
    CHECK_THROWS_AS(estimate_modulus(spec, line(5), t, 10), PreconditionError);
  }

  TEST_CASE("isotonic regression") {
    const std::vector<double> v{0.1, 0.3, 0.2, 0.4, 0.35, 0.9};
    const auto fit = isotonic_increasing(v);
    CHECK(std::is_sorted(fit.begin(), fit.end()));
    CHECK(fit[1] == doctest::Approx(0.25));
    CHECK(fit[2] == doctest::Approx(0.25));
    CHECK(fit[3] == doctest::Approx(0.375));
    CHECK(fit[5] == 0.9);
  }
}
