#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <lepf/errors.hpp>

#include "checks.hpp"
#include "experiments.hpp"

namespace {

using lepf::cli::Options;

void add_common_flags(CLI::App& app, Options& o) {
  app.add_option("--scheme", o.scheme, "lepf or ibpf")->capture_default_str();
  app.add_option("--M", o.group_size, "group size M")->capture_default_str();
  app.add_option("--m", o.groups, "number of groups m")->capture_default_str();
  app.add_option("--theta", o.theta, "LEPF shift")->capture_default_str();
  app.add_option("--n", o.n, "time horizon")->capture_default_str();
  app.add_option("--replicates", o.replicates, "independent replicates")->capture_default_str();
  app.add_option("--seed", o.seed, "master seed")->capture_default_str();
  app.add_option("--threads", o.threads, "worker threads (0 = hardware)")->capture_default_str();
  app.add_option("--out", o.out, "output path (stdout if empty)");
  app.add_option("--model", o.model, "gaussian, stochvol, binary or a finite model file")->capture_default_str();
  app.add_option("--method", o.method, "dp|mixture|mc|closed|theorem1|bruteforce");
  app.add_option("--mode", o.mode, "subcommand mode");
  app.add_option("--t", o.t, "mgf argument (default: gaussian toy t0)");
  app.add_option("--exponents", o.exponents, "scaling exponents p in M(n)=n^p")->delimiter(',');
  app.add_option("--alpha-file", o.alpha_file, "dense CSV alpha matrix");
  app.add_option("--samples", o.samples, "Monte Carlo sample budget")->capture_default_str();
  app.add_option("--truth", o.truth, "exact or reference")->capture_default_str();
  app.add_option("--reference-particles", o.reference_particles, "particles of the reference filter")
      ->capture_default_str();
  app.add_option("--phi", o.phi, "test function values per state")->delimiter(',');
  app.add_flag("--compare", o.compare, "run both schemes");
  app.add_option("--p", o.p, "binary toy p")->capture_default_str();
  app.add_option("--delta", o.delta, "binary toy delta")->capture_default_str();
  app.add_option("--sv-a", o.sv_a, "stochastic volatility a")->capture_default_str();
  app.add_option("--sv-b", o.sv_b, "stochastic volatility b")->capture_default_str();
  app.add_option("--sv-sigma", o.sv_sigma, "stochastic volatility sigma_V")->capture_default_str();
}

int selftest(const Options& o, const std::vector<int>& only, const std::string& fault, std::ostream& out) {
  lepf::checks::CheckOptions options;
  options.seed = o.seed;
  options.threads = o.threads;
  if (fault == "rwz") {
    options.rwz = lepf::checks::faulty_rwz_pmf;
  } else if (!fault.empty()) {
    throw lepf::ValidationError("unknown fault '" + fault + "' (expected rwz)");
  }
  std::vector<int> ids = only;
  if (ids.empty()) {
    for (int k = 1; k <= lepf::checks::kCriterionCount; ++k) ids.push_back(k);
  }
  int failed = 0;
  int total = 0;
  for (int k : ids) {
    const auto lines = lepf::checks::run_criterion(k, options);
    lepf::checks::print_lines(lines, out);
    out.flush();
    for (const auto& l : lines) {
      ++total;
      if (!l.passed) ++failed;
    }
  }
  out << "summary: " << total - failed << "/" << total << " passed\n";
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local exchange and independent bootstrap particle filters"};
  app.set_config("--config", "", "flat key=value file; flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Options options;
  add_common_flags(app, options);

  auto* check_alpha = app.add_subcommand("check-alpha", "verify interaction-matrix assumptions");
  auto* zlaw = app.add_subcommand("zlaw", "collision-count pmf or mgf curve");
  auto* variance = app.add_subcommand("variance", "asymptotic variance, R_n and scaling curves");
  auto* simulate = app.add_subcommand("simulate", "run particle filters and emit per-step records");
  auto* self = app.add_subcommand("selftest", "run the acceptance suite");
  std::vector<int> only;
  std::string fault;
  self->add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, lepf::checks::kCriterionCount));
  self->add_option("--inject-fault", fault, "deliberately break a component (rwz)");
  for (auto* sub : {check_alpha, zlaw, variance, simulate, self}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<std::ofstream> file;
  if (!options.out.empty()) {
    file = std::make_unique<std::ofstream>(options.out);
    if (!*file) {
      std::cerr << "error: cannot open '" << options.out << "' for writing\n";
      return 1;
    }
  }
  std::ostream& out = file ? *file : std::cout;

  try {
    if (check_alpha->parsed()) return lepf::cli::cmd_check_alpha(options, out);
    if (zlaw->parsed()) return lepf::cli::cmd_zlaw(options, out);
    if (variance->parsed()) return lepf::cli::cmd_variance(options, out, std::cerr);
    if (simulate->parsed()) return lepf::cli::cmd_simulate(options, out, std::cerr);
    return selftest(options, only, fault, out);
  } catch (...) {
    return lepf::cli::report_failure(std::cerr);
  }
}
