#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lepf/hmm.hpp"
#include "lepf/interaction.hpp"

namespace lepf {

enum class VarianceMethod {
  kSimpleClosed,
  kIbpfClosed,
  kTheorem1Dp,
  kTheorem1Bruteforce,
  kFiniteNTensor,
  kMonteCarlo,
};

std::string to_string(VarianceMethod method);

struct VarianceResult {
  double sigma2 = 0.0;
  double log_sigma2 = 0.0;
  VarianceMethod method = VarianceMethod::kSimpleClosed;
  /// False when sigma2 is zero or negative within rounding; the limit theorem
  /// assumes a strictly positive variance, so callers should treat such
  /// values with care.
  bool positive = true;
  std::vector<std::pair<std::string, double>> diagnostics;
};

/// phi - pi_n(phi) with pi_n the exact prediction filter of `model`.
Eigen::VectorXd centered_test_function(const FiniteHmm& model, const Eigen::VectorXd& phi, int n);

/// Variance of the iid toy: phi_var * E[exp(t Z_n)] with t = log(1 + c).
VarianceResult sigma2_simple_model(double c, int n, const InteractionScheme& scheme, double phi_var);

/// phi_var * (1 + c/M)^n, evaluated in log space.
VarianceResult sigma2_ibpf_closed(double c, int n, int group_size, double phi_var);

struct Theorem1Options {
  /// Largest n accepted; the evaluation visits up to 2^(n+2) collision patterns.
  int max_n = 14;
  /// Half width of the range of start offsets v. Defaults to 2 n beta; any
  /// wider window adds only zero terms.
  std::optional<std::int64_t> v_window;
};

/// Asymptotic variance of a finite-state model by summing, over every
/// collision pattern of the backward chain pair, its exact probability
/// (from the block-offset chain) times the tensor expression it selects.
VarianceResult sigma2_theorem1(const FiniteHmm& model, const Eigen::VectorXd& phi, int n,
                               const InteractionScheme& scheme, const Theorem1Options& options = {});

struct BruteforceOptions {
  std::optional<std::int64_t> v_window;
  /// Upper bound on the number of enumerated path pairs.
  double max_paths = 5e7;
};

/// Same quantity by direct enumeration of every pair of backward index paths
/// through the windows of the limiting matrix.
VarianceResult sigma2_theorem1_bruteforce(const FiniteHmm& model, const Eigen::VectorXd& phi, int n,
                                          const InteractionScheme& scheme, const BruteforceOptions& options = {});

struct SecondMoment {
  /// E[((1/N) sum_i W_n^i phibar(zeta_n^i))^2].
  double second_moment = 0.0;
  /// N * second_moment / gamma_n(1)^2.
  double scaled = 0.0;
  std::int64_t particles = 0;
};

/// Exact second moment of the unnormalized, centered estimate for an N
/// particle system with interaction matrix `alpha`, by a forward recursion on
/// the joint law of particle pairs. Requires N <= max_particles.
SecondMoment second_moment_finite_N(const FiniteHmm& model, const Eigen::VectorXd& phi, int n,
                                    const AlphaMatrix& alpha, std::int64_t max_particles = 256);

/// R_n: IBPF moment generating function of Z_n over the LEPF one.
double ratio_Rn(int n, int group_size, int theta, double t);

struct ScalingPoint {
  double exponent = 1.0;
  int n = 0;
  int group_size = 0;
  int theta = 0;
  double log_mgf = 0.0;
  double mgf = 1.0;
};

struct ScalingStudy {
  std::vector<ScalingPoint> points;
  std::vector<std::string> warnings;
};

/// M(n) = max(2, round(n^p)).
int scaled_group_size(int n, double exponent);

/// E[exp(t Z_n)] with M = M(n) for every exponent and every n in `horizons`.
/// LEPF shifts larger than M(n) - 1 are clamped, with a warning.
ScalingStudy scaling_study(const std::vector<double>& exponents, const std::vector<int>& horizons, double t,
                           int theta, SchemeKind scheme);

/// Limit of sqrt(m) ||pi_n^N(phi) - pi_n(phi)||_p:
/// sigma_n / sqrt(M) * sqrt(2) * (Gamma((p+1)/2) / sqrt(pi))^(1/p).
double clt_constant(double p, double sigma_n, int group_size);

}  // namespace lepf
