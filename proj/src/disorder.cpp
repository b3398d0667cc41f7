#include "mpa/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpa/error.hpp"
#include "mpa/parallel.hpp"

namespace mpa {

namespace {

constexpr std::uint64_t kResampleStream = 0x5245'5341'4D50ULL;

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void DisorderSpec::validate() const {
  std::visit(overloaded{
                 [](const Gaussian& g) {
                   if (!(g.stdev > 0.0) || !std::isfinite(g.mean)) {
                     throw ConfigError("gaussian disorder needs finite mean and stdev > 0");
                   }
                 },
                 [](const Uniform& u) {
                   if (!(u.a < u.b) || !std::isfinite(u.a) || !std::isfinite(u.b)) {
                     throw ConfigError("uniform disorder needs finite a < b");
                   }
                 },
                 [](const Bernoulli& b) {
                   if (!(b.p > 0.0 && b.p < 1.0)) {
                     throw ConfigError("bernoulli disorder needs p in (0,1)");
                   }
                   if (!(b.w > 0.0) || !std::isfinite(b.w)) {
                     throw ConfigError("bernoulli disorder needs w > 0");
                   }
                 },
                 [](const Constant& c) {
                   if (!std::isfinite(c.value)) throw ConfigError("constant disorder must be finite");
                 },
             },
             law);
}

std::string DisorderSpec::name() const {
  return std::visit(overloaded{
                        [](const Gaussian&) { return std::string("gaussian"); },
                        [](const Uniform&) { return std::string("uniform"); },
                        [](const Bernoulli&) { return std::string("bernoulli"); },
                        [](const Constant&) { return std::string("constant"); },
                    },
                    law);
}

bool DisorderSpec::nonnegative() const {
  return std::visit(overloaded{
                        [](const Gaussian&) { return false; },
                        [](const Uniform& u) { return u.a >= 0.0; },
                        [](const Bernoulli&) { return true; },
                        [](const Constant& c) { return c.value >= 0.0; },
                    },
                    law);
}

bool DisorderSpec::continuous() const {
  return std::holds_alternative<Gaussian>(law) || std::holds_alternative<Uniform>(law);
}

double DisorderSpec::practical_upper() const {
  return std::visit(overloaded{
                        [](const Gaussian& g) { return g.mean + 6.0 * g.stdev; },
                        [](const Uniform& u) { return u.b; },
                        [](const Bernoulli& b) { return b.w; },
                        [](const Constant& c) { return c.value; },
                    },
                    law);
}

double DisorderSpec::practical_lower() const {
  return std::visit(overloaded{
                        [](const Gaussian& g) { return g.mean - 6.0 * g.stdev; },
                        [](const Uniform& u) { return u.a; },
                        [](const Bernoulli&) { return 0.0; },
                        [](const Constant& c) { return c.value; },
                    },
                    law);
}

double keyed_uniform(std::uint64_t seed, std::uint64_t realization, const Site& site,
                     std::uint64_t stream) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ realization);
  h = mix64(h ^ static_cast<std::uint64_t>(site.d()));
  for (Coord c : site.coords()) h = mix64(h ^ static_cast<std::uint64_t>(c));
  h = mix64(h ^ stream);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double keyed_normal(std::uint64_t seed, std::uint64_t realization, const Site& site,
                    std::uint64_t stream) {
  const double u1 = keyed_uniform(seed, realization, site, 2 * stream);
  const double u2 = keyed_uniform(seed, realization, site, 2 * stream + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double draw_site(const DisorderSpec& spec, std::uint64_t realization, const Site& site) {
  return std::visit(
      overloaded{
          [&](const Gaussian& g) {
            return g.mean + g.stdev * keyed_normal(spec.seed, realization, site, 0);
          },
          [&](const Uniform& u) {
            return u.a + (u.b - u.a) * keyed_uniform(spec.seed, realization, site, 0);
          },
          [&](const Bernoulli& b) {
            return keyed_uniform(spec.seed, realization, site, 0) < b.p ? b.w : 0.0;
          },
          [](const Constant& c) { return c.value; },
      },
      spec.law);
}

// ---------------------------------------------------------------------------

FieldSample::FieldSample(std::vector<Site> region, std::vector<double> values,
                         std::uint64_t realization)
    : region_(std::move(region)), values_(std::move(values)), realization_(realization) {
  if (region_.empty()) throw PreconditionError("field region must be nonempty");
  if (region_.size() != values_.size()) {
    throw PreconditionError("field needs exactly one value per region site");
  }
  index_.reserve(region_.size());
  for (std::size_t i = 0; i < region_.size(); ++i) {
    if (region_[i].particles() != 1) {
      throw PreconditionError("field region sites must be single-particle sites");
    }
    if (!index_.emplace(region_[i], i).second) {
      throw PreconditionError("field region lists a site twice");
    }
  }
}

double FieldSample::at(const Site& x) const {
  auto it = index_.find(x);
  if (it == index_.end()) {
    throw PreconditionError("field region too small for cube projection");
  }
  return values_[it->second];
}

std::vector<Site> region_of(const Cube& single_particle_cube) {
  if (single_particle_cube.particles() != 1) {
    throw PreconditionError("region_of expects a single-particle cube");
  }
  return cube_sites(single_particle_cube);
}

std::vector<Site> projection_region(std::span<const Cube> cubes) {
  std::vector<Site> sites;
  for (const Cube& c : cubes) {
    for (int i = 0; i < c.particles(); ++i) {
      auto part = cube_sites(c.projection(i));
      sites.insert(sites.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

std::vector<Site> projection_region(const Cube& cube) {
  return projection_region(std::span<const Cube>(&cube, 1));
}

FieldSample sample_field(const DisorderSpec& spec, std::vector<Site> region,
                         std::uint64_t realization) {
  if (region.empty()) throw PreconditionError("field region must be nonempty");
  std::vector<double> values;
  values.reserve(region.size());
  for (const Site& x : region) values.push_back(draw_site(spec, realization, x));
  return FieldSample(std::move(region), std::move(values), realization);
}

MeanFluctDecomposition decompose(const FieldSample& field) {
  // Neumaier-compensated sum keeps the mean to one rounding for moderate |Q|.
  double sum = 0.0;
  double comp = 0.0;
  for (double v : field.values()) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  MeanFluctDecomposition out;
  out.mean = (sum + comp) / static_cast<double>(field.size());
  out.fluct.reserve(field.size());
  for (double v : field.values()) out.fluct.push_back(v - out.mean);
  return out;
}

FieldSample resample_mean_conditional(const FieldSample& field, const DisorderSpec& spec,
                                      std::uint64_t new_draw_index) {
  const auto* g = std::get_if<Gaussian>(&spec.law);
  if (g == nullptr) {
    throw PreconditionError("conditional independence unavailable: resampling the sample "
                            "mean requires gaussian disorder");
  }
  const auto split = decompose(field);
  const double q = static_cast<double>(field.size());
  const Site key = Site::point({static_cast<Coord>(new_draw_index)});
  const double xi = g->mean + g->stdev / std::sqrt(q) *
                                  keyed_normal(spec.seed, field.realization(), key, kResampleStream);
  std::vector<double> values;
  values.reserve(field.size());
  for (double eta : split.fluct) values.push_back(xi + eta);
  return FieldSample(field.region(), std::move(values), field.realization());
}

// ---------------------------------------------------------------------------

std::vector<double> isotonic_increasing(std::span<const double> values) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

ModulusEstimate modulus_from_means(std::vector<double> means, std::span<const double> t_grid) {
  if (means.empty()) throw PreconditionError("modulus estimate needs at least one sample");
  std::sort(means.begin(), means.end());
  const std::size_t n = means.size();
  ModulusEstimate est;
  est.trials = n;
  est.t_grid.assign(t_grid.begin(), t_grid.end());
  for (double t : t_grid) {
    if (!(t >= 0.0)) throw PreconditionError("modulus grid must be nonnegative");
    if (t == 0.0) {
      est.raw.push_back(0.0);
      continue;
    }
    // Best closed window [x_i, x_i + t]; an optimal window can start at a sample.
    std::size_t best = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (j < i) j = i;
      while (j < n && means[j] <= means[i] + t) ++j;
      best = std::max(best, j - i);
    }
    est.raw.push_back(static_cast<double>(best) / static_cast<double>(n));
  }
  est.nu_hat = isotonic_increasing(est.raw);
  est.dkw_halfwidth = std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(n)));
  return est;
}

ModulusEstimate estimate_modulus(const DisorderSpec& spec, const std::vector<Site>& region,
                                 std::span<const double> t_grid, std::size_t trials,
                                 int workers) {
  if (trials < 1000) throw PreconditionError("estimate_modulus needs at least 1000 trials");
  if (region.empty()) throw PreconditionError("modulus region must be nonempty");
  spec.validate();
  auto means = parallel::map_trials(trials, workers, [&](std::size_t r) {
    return decompose(sample_field(spec, region, r)).mean;
  });
  return modulus_from_means(std::move(means), t_grid);
}

double gaussian_mean_modulus(double t, std::size_t region_size, double stdev) {
  return t * std::sqrt(static_cast<double>(region_size)) /
         (stdev * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace mpa
