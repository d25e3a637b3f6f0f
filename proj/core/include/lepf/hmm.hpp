#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lepf/rng.hpp"

namespace lepf {

/// Tolerance used when validating probability vectors and stochastic rows.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Hidden Markov model on the finite state space {0, ..., S-1}.
///
/// The observation sequence is considered fixed, so the model carries the
/// potentials g_n(x) = g(x, y_n) directly: either one vector shared by every
/// time step, or one vector per time step up to a fixed horizon.
///
/// Rows of F and the initial distribution are renormalized when they sum to one
/// within kProbabilityTolerance and rejected otherwise. Potentials must be
/// strictly positive and finite. Instances are immutable.
class FiniteHmm {
 public:
  FiniteHmm(Eigen::VectorXd initial, Eigen::MatrixXd transition, Eigen::VectorXd potential);
  FiniteHmm(Eigen::VectorXd initial, Eigen::MatrixXd transition,
            std::vector<Eigen::VectorXd> potentials);

  int state_count() const noexcept { return static_cast<int>(initial_.size()); }
  const Eigen::VectorXd& initial() const noexcept { return initial_; }
  const Eigen::MatrixXd& transition() const noexcept { return transition_; }

  bool time_homogeneous() const noexcept { return potentials_.size() == 1; }

  /// Last time index with a stored potential; empty for homogeneous models.
  std::optional<int> horizon() const noexcept;

  /// g_n. Homogeneous models return the same vector for every n; time-varying
  /// models throw ValidationError beyond their horizon.
  const Eigen::VectorXd& potential(int n) const;
  const Eigen::VectorXd& log_potential(int n) const;

  /// True when every row of F equals the initial distribution, i.e. the chain
  /// forgets its current state at every step.
  bool has_iid_dynamics(double tolerance = kProbabilityTolerance) const;

 private:
  void validate();

  Eigen::VectorXd initial_;
  Eigen::MatrixXd transition_;
  std::vector<Eigen::VectorXd> potentials_;
  std::vector<Eigen::VectorXd> log_potentials_;
};

/// Hidden Markov model on the real line given by samplers and an observation
/// density. `observation_free` marks models whose potential does not depend on
/// the observation (the Gaussian toy); such models can be filtered without
/// simulating data.
struct GenericHmm {
  std::string name;
  std::function<double(SplitMix64&)> sample_initial;
  std::function<double(double, SplitMix64&)> sample_transition;
  /// log g(x, y), called as log_likelihood(y, x).
  std::function<double(double, double)> log_likelihood;
  std::function<double(double, SplitMix64&)> sample_observation;
  bool observation_free = false;
};

// Model zoo.

/// F(x, .) = pi0 for every x and g_n = g for every n.
FiniteHmm iid_toy(Eigen::VectorXd initial, Eigen::VectorXd potential);

/// Two-point iid model: pi0 = (p, 1-p), g = (1-delta, delta). Requires 0 < p < 1
/// and 0 < delta < 1.
FiniteHmm binary_toy(double p, double delta);

/// X ~ N(0,1) iid over time, g(x) = exp(-(x + shift)^2 / 2) / sqrt(2 pi) with
/// shift = 1/2.
GenericHmm gaussian_toy(double shift = 0.5);

/// X_0 ~ N(initial_mean, initial_sd^2), X_{k+1} = a X_k + V_k with
/// V_k ~ N(0, sigma_v^2), Y_k = b exp(X_k / 2) eps_k with eps_k ~ N(0, 1).
GenericHmm stoch_vol(double a, double b, double sigma_v, double initial_mean = 0.0,
                     double initial_sd = 1.0);

// Exact finite-state recursions.

/// Prediction filters pi_0, ..., pi_horizon. Throws NumericError if the
/// normalizer underflows.
std::vector<Eigen::VectorXd> exact_prediction_filter(const FiniteHmm& model, int horizon);

/// log gamma_n(1), the log of the total mass of pi0 Q_1 ... Q_n with
/// Q_k = diag(g_{k-1}) F.
double log_gamma_normalizer(const FiniteHmm& model, int n);

/// gamma_n(1); throws NumericError when it is not representable.
double gamma_normalizer(const FiniteHmm& model, int n);

/// Updated filter: pi_n reweighted by g_n.
Eigen::VectorXd updated_filter(const FiniteHmm& model, int n);

/// c = pi0(g^2) / pi0(g)^2 - 1 for a weight vector g under pi0.
double c_constant(const Eigen::VectorXd& initial, const Eigen::VectorXd& potential);

/// c for a finite model with iid dynamics and a homogeneous potential; throws
/// ValidationError otherwise.
double c_constant(const FiniteHmm& model);

/// Closed form of c for gaussian_toy(shift): log(1 + c) = log(2 / sqrt(3)) + shift^2 / 6.
double gaussian_toy_c(double shift = 0.5);

/// log(1 + c) of the Gaussian toy with shift 1/2, approximately 0.1855077.
double gaussian_toy_t0();

struct MixingReport {
  /// max_n max_{x,y} g_n(x) / g_n(y) over the stored potentials.
  double delta_ratio = 1.0;
  /// Smallest eps with F(x, .) <= eps F(y, .) for every pair of rows; infinite
  /// when a row has a zero where another row is positive.
  double epsilon_ratio = 1.0;
  bool satisfied = false;
  /// Pair of rows (x, y) witnessing an infinite epsilon_ratio.
  std::optional<std::pair<int, int>> violating_pair;
};

MixingReport check_mixing(const FiniteHmm& model);

struct HmmPath {
  std::vector<double> states;
  std::vector<double> observations;
};

/// Simulates X_0..X_{steps-1} and Y_0..Y_{steps-1}. Deterministic given `rng`.
HmmPath simulate_hmm(const GenericHmm& model, int steps, SplitMix64& rng);

// Plain-text model files.
//
//   # comment
//   S=2
//   pi0=0.5,0.5
//   F.row0=0.9,0.1
//   F.row1=0.2,0.8
//   g=1,2            (or g0=..., g1=..., one per time step)

FiniteHmm parse_finite_hmm(std::istream& in);
FiniteHmm load_finite_hmm(const std::string& path);

}  // namespace lepf
