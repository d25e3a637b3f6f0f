#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <lepf/hmm.hpp>
#include <lepf/interaction.hpp>
#include <lepf/smc.hpp>

namespace lepf::cli {

/// Settings shared by all subcommands. Populated from flags and an optional
/// key=value config file (flags win).
struct Options {
  std::string scheme = "lepf";
  int group_size = 20;
  int groups = 50;
  int theta = 1;
  int n = 100;
  std::uint64_t replicates = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
  std::string model = "gaussian";
  std::string method;
  std::string mode;
  std::optional<double> t;
  std::vector<double> exponents{0.75, 0.90, 1.00, 1.11, 1.33};
  std::string alpha_file;
  std::int64_t samples = 100000;
  std::string truth = "exact";
  std::int64_t reference_particles = 100000;
  std::vector<double> phi;
  bool compare = false;
  // Model zoo parameters.
  double p = 0.25;
  double delta = 0.01;
  double sv_a = 0.9;
  double sv_b = 0.1;
  double sv_sigma = 0.5;
};

InteractionScheme make_scheme(const Options& options);

/// Either a zoo model or a finite model file.
struct ModelChoice {
  std::optional<FiniteHmm> finite;
  std::optional<GenericHmm> generic;
  std::string name;
};

ModelChoice make_model(const Options& options);

/// Exit codes: 0 success, 1 validation failure, 2 invariant failure.
int cmd_check_alpha(const Options& options, std::ostream& out);
int cmd_zlaw(const Options& options, std::ostream& out);
int cmd_variance(const Options& options, std::ostream& out, std::ostream& log);
int cmd_simulate(const Options& options, std::ostream& out, std::ostream& log);

/// Maps an exception thrown by a command to its exit code and prints it.
int report_failure(std::ostream& log);

}  // namespace lepf::cli
