// mpanderson: multi-particle Anderson experiment runner.
//
//   mpanderson <experiment> [--config PATH] [--seed U64] [--trials N]
//              [--workers N] [--out DIR] [--emit-matrix]
//              [--gamma-exponent quarter|eighth]

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mpa/config.hpp"
#include "mpa/error.hpp"
#include "mpa/runner.hpp"

namespace {

struct Flags {
  std::string config_path;
  mpa::ConfigOverrides overrides;
  std::optional<std::string> gamma_exponent;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mpa::ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

mpa::ExperimentConfig load(mpa::Experiment experiment, const Flags& f) {
  const std::string text = f.config_path.empty() ? std::string() : read_file(f.config_path);
  auto overrides = f.overrides;
  if (f.gamma_exponent) overrides.gamma_exponent = mpa::parse_gamma_exponent(*f.gamma_exponent);
  return mpa::parse_config(text, experiment, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-particle Anderson model experiments"};
  app.require_subcommand(1);
  Flags flags;
  const mpa::Experiment all[] = {
      mpa::Experiment::Spectrum, mpa::Experiment::Green,   mpa::Experiment::Wegner,
      mpa::Experiment::Lifshitz, mpa::Experiment::MsaScan, mpa::Experiment::Decay,
      mpa::Experiment::Dynloc,   mpa::Experiment::Modulus};
  for (auto e : all) {
    auto* sub = app.add_subcommand(mpa::to_string(e), "run the " + mpa::to_string(e) + " experiment");
    sub->add_option("--config", flags.config_path, "experiment config file");
    sub->add_option("--seed", flags.overrides.seed, "disorder seed");
    sub->add_option("--trials", flags.overrides.trials, "number of realizations");
    sub->add_option("--workers", flags.overrides.workers, "worker threads");
    sub->add_option("--out", flags.overrides.out, "output directory");
    sub->add_flag("--emit-matrix", flags.overrides.emit_matrix, "also dump the realization-0 matrix");
    sub->add_option("--gamma-exponent", flags.gamma_exponent, "quarter or eighth")
        ->check(CLI::IsMember({"quarter", "eighth"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  mpa::Experiment experiment = mpa::Experiment::Spectrum;
  for (auto e : all) {
    if (app.got_subcommand(mpa::to_string(e))) experiment = e;
  }

  mpa::ExperimentConfig cfg;
  try {
    cfg = load(experiment, flags);
  } catch (const std::exception& e) {
    std::cerr << "mpanderson: " << e.what() << "\n";
    return mpa::exit_code_for(e);
  }
  const auto outcome = mpa::run(cfg);
  if (outcome.status != 0) {
    std::cerr << "mpanderson: " << outcome.message << "\n";
    return outcome.status;
  }
  std::cout << outcome.message;
  return 0;
}
