#include "lepf/variance.hpp"

#include <cmath>
#include <numbers>

#include "lepf/collision.hpp"
#include "lepf/errors.hpp"

namespace lepf {

std::string to_string(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::kSimpleClosed: return "simple_closed";
    case VarianceMethod::kIbpfClosed: return "ibpf_closed";
    case VarianceMethod::kTheorem1Dp: return "theorem1_dp";
    case VarianceMethod::kTheorem1Bruteforce: return "theorem1_bruteforce";
    case VarianceMethod::kFiniteNTensor: return "finiteN_tensor";
    case VarianceMethod::kMonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

namespace {

VarianceResult from_log(double log_sigma2, VarianceMethod method) {
  VarianceResult r;
  r.method = method;
  r.log_sigma2 = log_sigma2;
  r.sigma2 = std::exp(log_sigma2);
  r.positive = std::isfinite(log_sigma2);
  return r;
}

VarianceResult from_value(double sigma2, double scale, VarianceMethod method) {
  VarianceResult r;
  r.method = method;
  r.positive = sigma2 > 1e-13 * scale;
  r.sigma2 = std::max(sigma2, 0.0);
  r.log_sigma2 = std::log(r.sigma2);
  return r;
}

void check_phi(const FiniteHmm& model, const Eigen::VectorXd& phi, int n) {
  if (phi.size() != model.state_count()) throw ValidationError("phi must have one value per state");
  if (n < 0) throw ValidationError("n must be >= 0");
  if (!phi.allFinite()) throw ValidationError("phi must be finite");
}

/// Q_k / pi_{k-1}(g_{k-1}) for k = 1..n (index k-1), so that products of them
/// carry the 1 / gamma_n(1) normalization.
std::vector<Eigen::MatrixXd> normalized_kernels(const FiniteHmm& model, int n) {
  const auto filters = exact_prediction_filter(model, n);
  std::vector<Eigen::MatrixXd> q;
  q.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const auto& g = model.potential(k - 1);
    const double norm = filters[static_cast<std::size_t>(k - 1)].dot(g);
    q.push_back(g.asDiagonal() * model.transition() / norm);
  }
  return q;
}

/// C_1 H (x, y) = H(x, x).
Eigen::MatrixXd diagonal_pullback(const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out(h.rows(), h.cols());
  for (Eigen::Index x = 0; x < h.rows(); ++x) out.row(x).setConstant(h(x, x));
  return out;
}

std::int64_t default_window(int n, const InteractionScheme& scheme) {
  return 2 * static_cast<std::int64_t>(n) * scheme.band();
}

struct PatternSearch {
  const std::vector<Eigen::MatrixXd>& q;
  const Eigen::VectorXd& initial;
  const ZLawSpec& spec;
  int n;
  std::int64_t centre;
  double total = 0.0;
  std::int64_t patterns = 0;

  // weights[d + centre] = P(D_k = d, collision flags so far); h is the tensor
  // after applying the kernels of steps n, n-1, ..., n-k+1.
  void visit(int k, const std::vector<double>& weights, const Eigen::MatrixXd& h) {
    if (k == n) {
      double mass = 0.0;
      for (double w : weights) mass += w;
      total += mass * initial.dot(h * initial);
      ++patterns;
      return;
    }
    const auto& kernel = q[static_cast<std::size_t>(n - k - 1)];
    const Eigen::MatrixXd moved = kernel * h * kernel.transpose();
    for (int e = 0; e <= 1; ++e) {
      std::vector<double> next(weights.size(), 0.0);
      double mass = 0.0;
      for (std::size_t r = 0; r < weights.size(); ++r) {
        if (weights[r] == 0.0) continue;
        const DEState from{static_cast<std::int64_t>(r) - centre, 0};
        for (const auto& t : de_transitions(spec, from)) {
          if (t.to.e != e) continue;
          const auto to = static_cast<std::size_t>(t.to.d + centre);
          next[to] += weights[r] * t.probability;
          mass += weights[r] * t.probability;
        }
      }
      if (mass == 0.0) continue;
      visit(k + 1, next, e == 1 ? diagonal_pullback(moved) : moved);
    }
  }
};

}  // namespace

Eigen::VectorXd centered_test_function(const FiniteHmm& model, const Eigen::VectorXd& phi, int n) {
  check_phi(model, phi, n);
  const Eigen::VectorXd pi_n = exact_prediction_filter(model, n).back();
  return phi.array() - pi_n.dot(phi);
}

VarianceResult sigma2_simple_model(double c, int n, const InteractionScheme& scheme, double phi_var) {
  if (!(c >= 0.0)) throw ValidationError("c must be >= 0");
  if (!(phi_var >= 0.0)) throw ValidationError("phi variance must be >= 0");
  if (n < 0) throw ValidationError("n must be >= 0");
  const double t = std::log1p(c);
  auto r = from_log(std::log(phi_var) + z_mgf(ZLawSpec(scheme, n), t), VarianceMethod::kSimpleClosed);
  r.diagnostics.emplace_back("t", t);
  return r;
}

VarianceResult sigma2_ibpf_closed(double c, int n, int group_size, double phi_var) {
  if (!(c >= 0.0)) throw ValidationError("c must be >= 0");
  if (!(phi_var >= 0.0)) throw ValidationError("phi variance must be >= 0");
  if (n < 0) throw ValidationError("n must be >= 0");
  if (group_size < 1) throw ValidationError("M must be >= 1");
  return from_log(std::log(phi_var) + n * std::log1p(c / group_size), VarianceMethod::kIbpfClosed);
}

VarianceResult sigma2_theorem1(const FiniteHmm& model, const Eigen::VectorXd& phi, int n,
                               const InteractionScheme& scheme, const Theorem1Options& options) {
  check_phi(model, phi, n);
  if (n > options.max_n) {
    throw BudgetError("n = " + std::to_string(n) + " exceeds the collision-pattern budget (max_n = " +
                      std::to_string(options.max_n) + "); raise max_n or use the simplified-model route");
  }
  const Eigen::VectorXd phibar = centered_test_function(model, phi, n);
  const auto q = normalized_kernels(model, n);
  const ZLawSpec spec(scheme, n);
  const std::int64_t window = options.v_window.value_or(default_window(n, scheme));
  if (window < 0) throw ValidationError("v window must be >= 0");
  const int m_size = scheme.group_size();

  // Start offsets reach |d0| <= window / M + 1, and each step moves by one.
  const std::int64_t reach = window / m_size + 2 + n;
  const std::size_t width = 2 * static_cast<std::size_t>(reach) + 1;
  std::vector<double> coinciding(width, 0.0);
  std::vector<double> distinct(width, 0.0);
  for (Label u = 0; u < m_size; ++u) {
    for (std::int64_t v = -window; v <= window; ++v) {
      const DEState s = de_initial(u, u + v, m_size);
      (s.e == 1 ? coinciding : distinct)[static_cast<std::size_t>(s.d + reach)] += 1.0;
    }
  }

  PatternSearch search{q, model.initial(), spec, n, reach};
  const Eigen::MatrixXd outer = phibar * phibar.transpose();
  search.visit(0, coinciding, diagonal_pullback(outer));
  search.visit(0, distinct, outer);

  const double scale = model.initial().dot(phibar.cwiseProduct(phibar)) + 1e-300;
  auto r = from_value(search.total / m_size, scale, VarianceMethod::kTheorem1Dp);
  r.diagnostics.emplace_back("patterns", static_cast<double>(search.patterns));
  r.diagnostics.emplace_back("v_window", static_cast<double>(window));
  return r;
}

namespace {

struct PathSearch {
  const std::vector<Eigen::MatrixXd>& q;
  const Eigen::VectorXd& initial;
  const InteractionScheme& scheme;
  int n;
  double step_weight;
  double total = 0.0;

  void visit(int k, Label i, Label j, double weight, const Eigen::MatrixXd& h) {
    if (k == n) {
      total += weight * initial.dot(h * initial);
      return;
    }
    const auto& kernel = q[static_cast<std::size_t>(n - k - 1)];
    const Eigen::MatrixXd moved = kernel * h * kernel.transpose();
    const Eigen::MatrixXd pulled = diagonal_pullback(moved);
    const Window wi = alpha_infinity_row(scheme, i);
    const Window wj = alpha_infinity_row(scheme, j);
    for (Label a = wi.first; a < wi.first + wi.size; ++a) {
      for (Label b = wj.first; b < wj.first + wj.size; ++b) {
        visit(k + 1, a, b, weight * step_weight, a == b ? pulled : moved);
      }
    }
  }
};

}  // namespace

VarianceResult sigma2_theorem1_bruteforce(const FiniteHmm& model, const Eigen::VectorXd& phi, int n,
                                          const InteractionScheme& scheme, const BruteforceOptions& options) {
  check_phi(model, phi, n);
  const std::int64_t window = options.v_window.value_or(default_window(n, scheme));
  if (window < 0) throw ValidationError("v window must be >= 0");
  const int m_size = scheme.group_size();
  const double paths = static_cast<double>(m_size) * static_cast<double>(2 * window + 1) *
                       std::pow(static_cast<double>(m_size) * m_size, n);
  if (paths > options.max_paths) {
    throw BudgetError("brute-force enumeration of " + std::to_string(paths) + " path pairs exceeds the limit of " +
                      std::to_string(options.max_paths));
  }
  const Eigen::VectorXd phibar = centered_test_function(model, phi, n);
  const auto q = normalized_kernels(model, n);
  const Eigen::MatrixXd outer = phibar * phibar.transpose();
  const Eigen::MatrixXd outer_pulled = diagonal_pullback(outer);
  PathSearch search{q, model.initial(), scheme, n, 1.0 / (static_cast<double>(m_size) * m_size)};
  for (Label u = 0; u < m_size; ++u) {
    for (std::int64_t v = -window; v <= window; ++v) {
      search.visit(0, u, u + v, 1.0, v == 0 ? outer_pulled : outer);
    }
  }
  const double scale = model.initial().dot(phibar.cwiseProduct(phibar)) + 1e-300;
  auto r = from_value(search.total / m_size, scale, VarianceMethod::kTheorem1Bruteforce);
  r.diagnostics.emplace_back("path_pairs", paths);
  return r;
}

double ratio_Rn(int n, int group_size, int theta, double t) {
  const double ibpf = z_mgf(ZLawSpec(InteractionScheme::ibpf(group_size), n), t);
  const double lepf = z_mgf(ZLawSpec(InteractionScheme::lepf(group_size, theta), n), t);
  return std::exp(ibpf - lepf);
}

int scaled_group_size(int n, double exponent) {
  if (n < 0) throw ValidationError("n must be >= 0");
  const double m = std::round(std::pow(static_cast<double>(n), exponent));
  if (!(m < 2147483647.0)) throw ValidationError("M(n) overflows");
  return std::max(2, static_cast<int>(m));
}

ScalingStudy scaling_study(const std::vector<double>& exponents, const std::vector<int>& horizons, double t,
                           int theta, SchemeKind scheme) {
  ScalingStudy study;
  for (double p : exponents) {
    if (!(p > 0.0)) throw ValidationError("scaling exponents must be > 0");
    for (int n : horizons) {
      ScalingPoint pt;
      pt.exponent = p;
      pt.n = n;
      pt.group_size = scaled_group_size(n, p);
      InteractionScheme s = InteractionScheme::ibpf(pt.group_size);
      if (scheme == SchemeKind::kLepf) {
        pt.theta = std::min(theta, pt.group_size - 1);
        if (pt.theta != theta) {
          study.warnings.push_back("p=" + std::to_string(p) + ", n=" + std::to_string(n) + ": theta clamped to " +
                                   std::to_string(pt.theta) + " because M(n)=" + std::to_string(pt.group_size));
        }
        s = InteractionScheme::lepf(pt.group_size, pt.theta);
      }
      pt.log_mgf = z_mgf(ZLawSpec(s, n), t);
      pt.mgf = std::exp(pt.log_mgf);
      study.points.push_back(pt);
    }
  }
  return study;
}

double clt_constant(double p, double sigma_n, int group_size) {
  if (!(p >= 1.0)) throw ValidationError("p must be >= 1");
  if (!(sigma_n >= 0.0)) throw ValidationError("sigma_n must be >= 0");
  if (group_size < 1) throw ValidationError("M must be >= 1");
  const double bracket = std::exp((std::lgamma((p + 1.0) / 2.0) - 0.5 * std::log(std::numbers::pi)) / p);
  return sigma_n / std::sqrt(static_cast<double>(group_size)) * std::numbers::sqrt2 * bracket;
}

}  // namespace lepf
