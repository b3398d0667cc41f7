#pragma once

// Experiment configuration: a strict `key = value` text format with `#`
// comments and dotted section keys.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mpa/disorder.hpp"
#include "mpa/geometry.hpp"
#include "mpa/model.hpp"
#include "mpa/msa.hpp"

namespace mpa {

enum class Experiment { Spectrum, Green, Wegner, Lifshitz, MsaScan, Decay, Dynloc, Modulus };

std::string to_string(Experiment e);
/// Throws ConfigError for an unknown name.
Experiment parse_experiment(std::string_view name);

struct GreenParams {
  double E = -1.0;
  std::optional<Site> base;        // cube center when absent
  std::optional<double> eta;       // min(1, dist) (1 - 1e-6) when absent
};

struct WegnerParams {
  int L1 = 2;
  int L2 = 2;
  std::optional<Site> u;
  std::optional<Site> v;
  std::vector<double> s{0.005, 0.01, 0.02, 0.05};
  std::size_t modulus_trials = 10'000;
};

struct LifshitzParams {
  std::vector<int> L0{4, 9, 16, 25};
  double C = 1.0;
};

struct ScanParams {
  std::optional<Site> u;
  std::optional<Site> v;
  std::size_t grid_cap = 200'000;
};

struct DecayParams {
  std::size_t lowest = 5;
  std::optional<std::pair<double, double>> interval;
  Coord distance_floor = 1;
  double amplitude_floor = 1e-12;
};

struct DynlocParams {
  std::optional<std::pair<double, double>> interval;  // whole spectrum when absent
  std::vector<double> s{1.0};
  int K_radius = 0;
  std::optional<double> trace_C;
  std::optional<double> trace_kappa;
};

struct ModulusParams {
  std::vector<double> t{0.01, 0.02, 0.05, 0.1, 0.2};
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Spectrum;
  Dims dims;
  DisorderSpec disorder;
  InteractionSpec interaction;
  MsaParams msa;
  int L = 2;
  std::optional<Site> center;  // origin when absent
  std::size_t trials = 1;
  int workers = 1;
  std::string out = "results";
  bool emit_matrix = false;

  GreenParams green;
  WegnerParams wegner;
  LifshitzParams lifshitz;
  ScanParams scan;
  DecayParams decay;
  DynlocParams dynloc;
  ModulusParams modulus;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
  Site resolved_center() const;

  /// Every setting, defaults included, one `key = value` per line in a fixed order.
  std::string canonical_text() const;
  nlohmann::json to_json() const;
};

/// Command-line values; each one present replaces the file's value.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool emit_matrix = false;
  std::optional<GammaExponent> gamma_exponent;
};

/// Strict parse: unknown keys, keys of another experiment, duplicate keys and
/// malformed values are rejected with the offending line number. When
/// `experiment` is given it must agree with an `experiment` key in the text.
/// Overrides are applied before validation.
ExperimentConfig parse_config(std::string_view text,
                              std::optional<Experiment> experiment = std::nullopt,
                              const ConfigOverrides& overrides = {});

}  // namespace mpa
