#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include <lepf/collision.hpp>
#include <lepf/errors.hpp>
#include <lepf/variance.hpp>

namespace lepf::cli {

namespace {

constexpr std::uint64_t kObservationTag = 7;
constexpr std::uint64_t kChainTag = 11;

void set_precision(std::ostream& out) { out.precision(17); }

Eigen::VectorXd phi_vector(const Options& options, const FiniteHmm& model) {
  if (options.phi.empty()) {
    Eigen::VectorXd phi(model.state_count());
    for (int x = 0; x < model.state_count(); ++x) phi[x] = x;
    return phi;
  }
  if (static_cast<int>(options.phi.size()) != model.state_count()) {
    throw ValidationError("--phi needs one value per state (" + std::to_string(model.state_count()) + ")");
  }
  return Eigen::Map<const Eigen::VectorXd>(options.phi.data(), static_cast<Eigen::Index>(options.phi.size()));
}

double default_t(const Options& options) { return options.t.value_or(gaussian_toy_t0()); }

}  // namespace

InteractionScheme make_scheme(const Options& options) {
  const SchemeKind kind = parse_scheme_kind(options.scheme);
  return kind == SchemeKind::kLepf ? InteractionScheme::lepf(options.group_size, options.theta)
                                   : InteractionScheme::ibpf(options.group_size);
}

ModelChoice make_model(const Options& options) {
  ModelChoice choice;
  choice.name = options.model;
  if (options.model == "gaussian") {
    choice.generic = gaussian_toy();
  } else if (options.model == "stochvol") {
    choice.generic = stoch_vol(options.sv_a, options.sv_b, options.sv_sigma);
  } else if (options.model == "binary") {
    choice.finite = binary_toy(options.p, options.delta);
  } else if (std::filesystem::exists(options.model)) {
    choice.finite = load_finite_hmm(options.model);
  } else {
    throw ValidationError("unknown model '" + options.model +
                          "' (expected gaussian, stochvol, binary or a model file)");
  }
  return choice;
}

int cmd_check_alpha(const Options& options, std::ostream& out) {
  const InteractionScheme scheme = make_scheme(options);
  const AlphaMatrix alpha =
      options.alpha_file.empty() ? build_alpha(scheme, options.groups) : load_alpha_matrix(options.alpha_file);
  const AssumptionReport report = verify_assumptions(alpha, scheme);
  out << "# " << scheme.describe() << ", N=" << alpha.size() << '\n';
  out << "check,status,witness\n";
  for (const auto& c : report.checks) {
    const char* status = !c.applicable ? "SKIP" : (c.passed ? "PASS" : "FAIL");
    out << c.name << ',' << status << ',' << c.witness << '\n';
  }
  return report.all_passed() ? 0 : 1;
}

int cmd_zlaw(const Options& options, std::ostream& out) {
  const InteractionScheme scheme = make_scheme(options);
  if (options.n < 0) throw ValidationError("--n must be >= 0");
  set_precision(out);
  const std::string mode = options.mode.empty() ? "pmf" : options.mode;
  if (mode == "mgf") {
    const auto curve = z_mgf_curve(scheme, options.n, default_t(options));
    out << "n,log_mgf\n";
    for (std::size_t k = 0; k < curve.size(); ++k) out << k << ',' << curve[k] << '\n';
    return 0;
  }
  if (mode != "pmf") throw ValidationError("zlaw --mode must be pmf or mgf");
  const std::string method = options.method.empty() ? "dp" : options.method;
  PmfTable pmf;
  if (method == "dp") {
    pmf = z_pmf_dp(ZLawSpec(scheme, options.n));
  } else if (method == "mixture") {
    pmf = scheme.kind() == SchemeKind::kLepf
              ? z_pmf_lepf_mixture(options.n, scheme.group_size(), scheme.theta())
              : z_pmf_ibpf(options.n, scheme.group_size());
  } else if (method == "mc") {
    if (options.samples < 1) throw ValidationError("--samples must be >= 1 for the mc method");
    auto rng = RngStream(options.seed).auxiliary(0, kChainTag);
    pmf = sample_z_pmf(scheme, options.n, 1, 1, options.samples, rng);
  } else {
    throw ValidationError("zlaw --method must be dp, mixture or mc");
  }
  out << "z,probability\n";
  for (std::int64_t z = pmf.min_value(); z <= pmf.max_value(); ++z) out << z << ',' << pmf.at(z) << '\n';
  return 0;
}

namespace {

void write_variance_row(std::ostream& out, int n, const VarianceResult& r) {
  out << n << ',' << to_string(r.method) << ',' << r.sigma2 << ',' << r.log_sigma2 << '\n';
}

/// Horizons 1, 2, 5, 10, 20, 50, ... up to n_max, always ending at n_max.
std::vector<int> horizon_grid(int n_max) {
  std::vector<int> grid;
  for (int scale = 1; scale <= n_max; scale *= 10) {
    for (int f : {1, 2, 5}) {
      if (f * scale < n_max) grid.push_back(f * scale);
    }
    if (scale > std::numeric_limits<int>::max() / 10) break;
  }
  grid.push_back(n_max);
  return grid;
}

}  // namespace

int cmd_variance(const Options& options, std::ostream& out, std::ostream& log) {
  set_precision(out);
  if (options.n < 0) throw ValidationError("--n must be >= 0");
  const std::string mode = options.mode.empty() ? "sigma2" : options.mode;
  const double t = default_t(options);

  if (mode == "ratio") {
    const auto ibpf = z_mgf_curve(InteractionScheme::ibpf(options.group_size), options.n, t);
    const auto lepf = z_mgf_curve(InteractionScheme::lepf(options.group_size, options.theta), options.n, t);
    out << "n,R_n,log_R_n\n";
    for (std::size_t k = 0; k < ibpf.size(); ++k) {
      const double lr = ibpf[k] - lepf[k];
      out << k << ',' << std::exp(lr) << ',' << lr << '\n';
    }
    return 0;
  }
  if (mode == "theta-sweep") {
    if (options.group_size < 2) throw ValidationError("theta sweep needs M >= 2");
    out << "theta,R_n,log_R_n\n";
    for (int theta = 1; theta < options.group_size; ++theta) {
      const double r = ratio_Rn(options.n, options.group_size, theta, t);
      out << theta << ',' << r << ',' << std::log(r) << '\n';
    }
    return 0;
  }
  if (mode == "scaling") {
    const auto study =
        scaling_study(options.exponents, horizon_grid(std::max(1, options.n)), t, options.theta,
                      parse_scheme_kind(options.scheme));
    for (const auto& w : study.warnings) log << "warning: " << w << '\n';
    out << "p,n,M,theta,mgf,log_mgf\n";
    for (const auto& pt : study.points) {
      out << pt.exponent << ',' << pt.n << ',' << pt.group_size << ',' << pt.theta << ',' << pt.mgf << ','
          << pt.log_mgf << '\n';
    }
    return 0;
  }
  if (mode != "sigma2") throw ValidationError("variance --mode must be sigma2, ratio, theta-sweep or scaling");

  const InteractionScheme scheme = make_scheme(options);
  const ModelChoice model = make_model(options);
  const std::string method = options.method.empty() ? "closed" : options.method;
  out << "n,method,sigma2,log_sigma2\n";
  if (method == "closed") {
    double c = 0.0;
    double phi_var = 1.0;
    if (model.finite) {
      c = c_constant(*model.finite);
      const Eigen::VectorXd phibar = centered_test_function(*model.finite, phi_vector(options, *model.finite), 0);
      phi_var = model.finite->initial().dot(phibar.cwiseProduct(phibar));
    } else if (model.name == "gaussian") {
      c = gaussian_toy_c();
    } else {
      throw ValidationError("the closed form needs an iid model (gaussian, binary or an iid model file)");
    }
    const auto curve = z_mgf_curve(scheme, options.n, std::log1p(c));
    for (int k = 0; k <= options.n; ++k) {
      VarianceResult r;
      r.method = scheme.kind() == SchemeKind::kIbpf ? VarianceMethod::kIbpfClosed : VarianceMethod::kSimpleClosed;
      r.log_sigma2 = std::log(phi_var) + curve[static_cast<std::size_t>(k)];
      r.sigma2 = std::exp(r.log_sigma2);
      write_variance_row(out, k, r);
    }
    return 0;
  }
  if (!model.finite) throw ValidationError("method '" + method + "' needs a finite-state model");
  const Eigen::VectorXd phi = phi_vector(options, *model.finite);
  for (int k = 0; k <= options.n; ++k) {
    VarianceResult r;
    if (method == "theorem1") {
      r = sigma2_theorem1(*model.finite, phi, k, scheme);
    } else if (method == "bruteforce") {
      r = sigma2_theorem1_bruteforce(*model.finite, phi, k, scheme);
    } else {
      throw ValidationError("variance --method must be closed, theorem1 or bruteforce");
    }
    if (!r.positive) log << "warning: sigma2 at n=" << k << " is not strictly positive\n";
    write_variance_row(out, k, r);
  }
  return 0;
}

namespace {

struct SimulationSetup {
  std::shared_ptr<const FilterModel> model;
  TestFn phi;
  /// pi_n(phi) for n = 0..steps when available.
  std::vector<double> exact_truth;
  bool finite = false;
};

SimulationSetup make_simulation(const Options& options) {
  SimulationSetup setup;
  ModelChoice choice = make_model(options);
  if (choice.finite) {
    const Eigen::VectorXd phi = phi_vector(options, *choice.finite);
    for (const auto& pi : exact_prediction_filter(*choice.finite, options.n)) setup.exact_truth.push_back(pi.dot(phi));
    setup.phi = finite_test_function(phi);
    setup.model = std::make_shared<FiniteFilterModel>(*choice.finite);
    setup.finite = true;
    return setup;
  }
  setup.phi = [](double x) { return x; };
  std::vector<double> observations;
  if (!choice.generic->observation_free) {
    auto rng = RngStream(options.seed).auxiliary(0, kObservationTag);
    observations = simulate_hmm(*choice.generic, options.n + 1, rng).observations;
  } else {
    // Gaussian toy: pi_n is the standard normal for every n.
    setup.exact_truth.assign(static_cast<std::size_t>(options.n) + 1, 0.0);
  }
  setup.model = std::make_shared<ObservedModel>(*choice.generic, std::move(observations));
  return setup;
}

std::vector<double> reference_truth(const Options& options, const SimulationSetup& setup, std::ostream& log) {
  const std::int64_t needed = 10LL * options.group_size * options.groups;
  if (options.reference_particles < needed) {
    throw ValidationError("--nref must be at least 10*M*m = " + std::to_string(needed));
  }
  if (setup.finite) log << "warning: exact truth is available for finite models and is cheaper\n";
  RunConfig ref;
  ref.model = setup.model;
  ref.scheme = InteractionScheme::ibpf(static_cast<int>(options.reference_particles));
  ref.groups = 1;
  ref.steps = options.n;
  ref.replicates = 1;
  ref.seed = RngStream(options.seed).replicate_seed(0xBEEF);
  ref.phi = setup.phi;
  std::vector<double> truth;
  for (const auto& r : run_replicates(ref)) truth.push_back(r.estimate);
  return truth;
}

RunConfig base_run(const Options& options, const SimulationSetup& setup, const InteractionScheme& scheme) {
  RunConfig config;
  config.model = setup.model;
  config.scheme = scheme;
  config.groups = options.groups;
  config.steps = options.n;
  config.replicates = options.replicates;
  config.seed = options.seed;
  config.threads = options.threads;
  config.phi = setup.phi;
  return config;
}

InteractionScheme other_scheme(const Options& options, SchemeKind kind) {
  return kind == SchemeKind::kLepf ? InteractionScheme::lepf(options.group_size, options.theta)
                                   : InteractionScheme::ibpf(options.group_size);
}

}  // namespace

int cmd_simulate(const Options& options, std::ostream& out, std::ostream& log) {
  if (options.n < 0) throw ValidationError("--n must be >= 0");
  const InteractionScheme scheme = make_scheme(options);
  const SimulationSetup setup = make_simulation(options);
  set_precision(out);
  const std::string mode = options.mode.empty() ? "records" : options.mode;

  std::vector<InteractionScheme> schemes{scheme};
  if (options.compare) {
    schemes = {other_scheme(options, SchemeKind::kIbpf), other_scheme(options, SchemeKind::kLepf)};
  }

  if (mode == "records") {
    bool header = true;
    for (const auto& s : schemes) {
      const auto records = run_replicates(base_run(options, setup, s));
      std::ostringstream chunk;
      write_records_csv(records, chunk);
      std::string text = chunk.str();
      if (!header) text.erase(0, text.find('\n') + 1);
      out << text;
      header = false;
    }
    return 0;
  }
  if (mode == "ess") {
    out << "n,scheme,ess,running_min\n";
    for (const auto& s : schemes) {
      RunConfig config = base_run(options, setup, s);
      config.replicates = 1;
      double running = 1.0;
      for (const auto& r : run_replicates(config)) {
        running = std::min(running, r.ess);
        out << r.n << ',' << to_string(r.scheme) << ',' << r.ess << ',' << running << '\n';
      }
    }
    return 0;
  }
  if (mode == "mse") {
    std::vector<double> truth;
    if (options.truth == "exact") {
      if (setup.exact_truth.empty()) {
        throw ValidationError("exact truth is not available for model '" + options.model + "'; use --truth reference");
      }
      truth = setup.exact_truth;
    } else if (options.truth == "reference") {
      truth = reference_truth(options, setup, log);
    } else {
      throw ValidationError("--truth must be exact or reference");
    }
    std::vector<std::vector<double>> mse;
    for (const auto& s : {other_scheme(options, SchemeKind::kIbpf), other_scheme(options, SchemeKind::kLepf)}) {
      std::vector<double> acc(static_cast<std::size_t>(options.n) + 1, 0.0);
      for (const auto& r : run_replicates(base_run(options, setup, s))) {
        const double e = r.estimate - truth[static_cast<std::size_t>(r.n)];
        acc[static_cast<std::size_t>(r.n)] += e * e;
      }
      for (auto& a : acc) a /= static_cast<double>(options.replicates);
      mse.push_back(std::move(acc));
    }
    out << "n,mse_ibpf,mse_lepf,ratio\n";
    for (int k = 0; k <= options.n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      out << k << ',' << mse[0][i] << ',' << mse[1][i] << ',' << mse[0][i] / mse[1][i] << '\n';
    }
    return 0;
  }
  throw ValidationError("simulate --mode must be records, ess or mse");
}

int report_failure(std::ostream& log) {
  try {
    throw;
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  } catch (const BudgetError& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    log << "invariant violated: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << "failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace lepf::cli
