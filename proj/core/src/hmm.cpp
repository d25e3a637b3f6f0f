#include "lepf/hmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "lepf/errors.hpp"

namespace lepf {

namespace {

void normalize_probability(Eigen::Ref<Eigen::VectorXd> v, const std::string& what) {
  if (v.size() == 0) throw ValidationError(what + " is empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) {
      throw ValidationError(what + " has a negative or non-finite entry at " + std::to_string(i));
    }
  }
  const double total = v.sum();
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << " sums to " << total << ", not 1";
    throw ValidationError(msg.str());
  }
  v /= total;
}

}  // namespace

FiniteHmm::FiniteHmm(Eigen::VectorXd initial, Eigen::MatrixXd transition, Eigen::VectorXd potential)
    : initial_(std::move(initial)), transition_(std::move(transition)) {
  potentials_.push_back(std::move(potential));
  validate();
}

FiniteHmm::FiniteHmm(Eigen::VectorXd initial, Eigen::MatrixXd transition,
                     std::vector<Eigen::VectorXd> potentials)
    : initial_(std::move(initial)),
      transition_(std::move(transition)),
      potentials_(std::move(potentials)) {
  if (potentials_.empty()) throw ValidationError("at least one potential vector is required");
  validate();
}

void FiniteHmm::validate() {
  const Eigen::Index s = initial_.size();
  normalize_probability(initial_, "initial distribution");
  if (transition_.rows() != s || transition_.cols() != s) {
    throw ValidationError("transition matrix must be " + std::to_string(s) + "x" + std::to_string(s));
  }
  for (Eigen::Index r = 0; r < s; ++r) {
    Eigen::VectorXd row = transition_.row(r).transpose();
    normalize_probability(row, "transition row " + std::to_string(r));
    transition_.row(r) = row.transpose();
  }
  log_potentials_.clear();
  for (std::size_t n = 0; n < potentials_.size(); ++n) {
    const auto& g = potentials_[n];
    if (g.size() != s) {
      throw ValidationError("potential " + std::to_string(n) + " has wrong length");
    }
    for (Eigen::Index x = 0; x < s; ++x) {
      if (!std::isfinite(g[x]) || !(g[x] > 0.0)) {
        throw ValidationError("potential " + std::to_string(n) + " must be positive and finite");
      }
    }
    log_potentials_.push_back(g.array().log().matrix());
  }
}

std::optional<int> FiniteHmm::horizon() const noexcept {
  if (time_homogeneous()) return std::nullopt;
  return static_cast<int>(potentials_.size()) - 1;
}

const Eigen::VectorXd& FiniteHmm::potential(int n) const {
  if (n < 0) throw ValidationError("negative time index");
  if (time_homogeneous()) return potentials_.front();
  if (static_cast<std::size_t>(n) >= potentials_.size()) {
    throw ValidationError("time index " + std::to_string(n) + " beyond model horizon " +
                          std::to_string(potentials_.size() - 1));
  }
  return potentials_[static_cast<std::size_t>(n)];
}

const Eigen::VectorXd& FiniteHmm::log_potential(int n) const {
  potential(n);
  return time_homogeneous() ? log_potentials_.front() : log_potentials_[static_cast<std::size_t>(n)];
}

bool FiniteHmm::has_iid_dynamics(double tolerance) const {
  for (Eigen::Index r = 0; r < transition_.rows(); ++r) {
    if ((transition_.row(r).transpose() - initial_).cwiseAbs().maxCoeff() > tolerance) return false;
  }
  return true;
}

FiniteHmm iid_toy(Eigen::VectorXd initial, Eigen::VectorXd potential) {
  const Eigen::Index s = initial.size();
  Eigen::MatrixXd transition(s, s);
  for (Eigen::Index r = 0; r < s; ++r) transition.row(r) = initial.transpose();
  return FiniteHmm(std::move(initial), std::move(transition), std::move(potential));
}

FiniteHmm binary_toy(double p, double delta) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("binary toy requires 0 < p < 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("binary toy requires 0 < delta < 1");
  Eigen::VectorXd initial(2);
  initial << p, 1.0 - p;
  Eigen::VectorXd potential(2);
  potential << 1.0 - delta, delta;
  return iid_toy(std::move(initial), std::move(potential));
}

GenericHmm gaussian_toy(double shift) {
  GenericHmm model;
  model.name = "gaussian";
  model.sample_initial = [](SplitMix64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); };
  model.sample_transition = [](double, SplitMix64& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  };
  model.log_likelihood = [shift](double, double x) {
    return -0.5 * (x + shift) * (x + shift) - 0.5 * std::log(2.0 * std::numbers::pi);
  };
  model.sample_observation = [](double, SplitMix64&) { return 0.0; };
  model.observation_free = true;
  return model;
}

GenericHmm stoch_vol(double a, double b, double sigma_v, double initial_mean, double initial_sd) {
  if (!(b > 0.0)) throw ValidationError("stochastic volatility requires b > 0");
  if (sigma_v < 0.0 || initial_sd < 0.0) throw ValidationError("standard deviations must be >= 0");
  GenericHmm model;
  model.name = "stochvol";
  model.sample_initial = [initial_mean, initial_sd](SplitMix64& rng) {
    if (initial_sd == 0.0) return initial_mean;
    return std::normal_distribution<double>(initial_mean, initial_sd)(rng);
  };
  model.sample_transition = [a, sigma_v](double x, SplitMix64& rng) {
    if (sigma_v == 0.0) return a * x;
    return a * x + std::normal_distribution<double>(0.0, sigma_v)(rng);
  };
  model.log_likelihood = [b](double y, double x) {
    // Y | X = x ~ N(0, b^2 e^x)
    const double log_var = 2.0 * std::log(b) + x;
    return -0.5 * (std::log(2.0 * std::numbers::pi) + log_var + y * y * std::exp(-log_var));
  };
  model.sample_observation = [b](double x, SplitMix64& rng) {
    return b * std::exp(0.5 * x) * std::normal_distribution<double>(0.0, 1.0)(rng);
  };
  return model;
}

std::vector<Eigen::VectorXd> exact_prediction_filter(const FiniteHmm& model, int horizon) {
  if (horizon < 0) throw ValidationError("horizon must be >= 0");
  std::vector<Eigen::VectorXd> filters;
  filters.reserve(static_cast<std::size_t>(horizon) + 1);
  filters.push_back(model.initial());
  for (int n = 1; n <= horizon; ++n) {
    Eigen::VectorXd next =
        (filters.back().cwiseProduct(model.potential(n - 1)).transpose() * model.transition()).transpose();
    const double total = next.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw NumericError("prediction filter normalizer underflowed at n = " + std::to_string(n));
    }
    filters.push_back(next / total);
  }
  return filters;
}

double log_gamma_normalizer(const FiniteHmm& model, int n) {
  if (n < 0) throw ValidationError("n must be >= 0");
  Eigen::VectorXd v = model.initial();
  double log_total = 0.0;
  for (int k = 1; k <= n; ++k) {
    v = (v.cwiseProduct(model.potential(k - 1)).transpose() * model.transition()).transpose();
    const double total = v.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw NumericError("normalizing constant underflowed at n = " + std::to_string(k));
    }
    log_total += std::log(total);
    v /= total;
  }
  return log_total;
}

double gamma_normalizer(const FiniteHmm& model, int n) {
  const double log_value = log_gamma_normalizer(model, n);
  const double value = std::exp(log_value);
  if (value == 0.0 || !std::isfinite(value)) {
    throw NumericError("gamma_n(1) = exp(" + std::to_string(log_value) + ") is not representable");
  }
  return value;
}

Eigen::VectorXd updated_filter(const FiniteHmm& model, int n) {
  const Eigen::VectorXd predicted = exact_prediction_filter(model, n).back();
  Eigen::VectorXd weighted = predicted.cwiseProduct(model.potential(n));
  const double total = weighted.sum();
  if (!(total > 0.0)) throw NumericError("updated filter normalizer vanished");
  return weighted / total;
}

double c_constant(const Eigen::VectorXd& initial, const Eigen::VectorXd& potential) {
  const double first = initial.dot(potential);
  const double second = initial.dot(potential.cwiseProduct(potential));
  return std::max(0.0, second / (first * first) - 1.0);
}

double c_constant(const FiniteHmm& model) {
  if (!model.has_iid_dynamics() || !model.time_homogeneous()) {
    throw ValidationError("c is defined for models with iid dynamics and a single potential");
  }
  return c_constant(model.initial(), model.potential(0));
}

double gaussian_toy_c(double shift) {
  return std::expm1(std::log(2.0 / std::sqrt(3.0)) + shift * shift / 6.0);
}

double gaussian_toy_t0() { return std::log(2.0 / std::sqrt(3.0)) + 1.0 / 24.0; }

MixingReport check_mixing(const FiniteHmm& model) {
  MixingReport report;
  const int s = model.state_count();
  const int last = model.horizon().value_or(0);
  for (int n = 0; n <= last; ++n) {
    const auto& g = model.potential(n);
    report.delta_ratio = std::max(report.delta_ratio, g.maxCoeff() / g.minCoeff());
  }
  const auto& f = model.transition();
  double eps = 1.0;
  for (int x = 0; x < s && !report.violating_pair; ++x) {
    for (int y = 0; y < s && !report.violating_pair; ++y) {
      for (int z = 0; z < s; ++z) {
        if (f(x, z) == 0.0) continue;
        if (f(y, z) == 0.0) {
          report.violating_pair = std::make_pair(x, y);
          break;
        }
        eps = std::max(eps, f(x, z) / f(y, z));
      }
    }
  }
  report.epsilon_ratio = report.violating_pair ? std::numeric_limits<double>::infinity() : eps;
  report.satisfied = std::isfinite(report.delta_ratio) && std::isfinite(report.epsilon_ratio);
  return report;
}

HmmPath simulate_hmm(const GenericHmm& model, int steps, SplitMix64& rng) {
  if (steps < 1) throw ValidationError("simulate_hmm requires steps >= 1");
  HmmPath path;
  path.states.reserve(static_cast<std::size_t>(steps));
  path.observations.reserve(static_cast<std::size_t>(steps));
  double x = model.sample_initial(rng);
  for (int k = 0; k < steps; ++k) {
    if (k > 0) x = model.sample_transition(x, rng);
    path.states.push_back(x);
    path.observations.push_back(model.sample_observation(x, rng));
  }
  return path;
}

}  // namespace lepf
