#include <cmath>

#include "lepf/errors.hpp"
#include "lepf/variance.hpp"

namespace lepf {

namespace {

/// Measure-side counterpart of the diagonal pullback: all mass of (x, y) moves
/// to (x, x).
Eigen::MatrixXd collapse_to_diagonal(const Eigen::MatrixXd& mu) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mu.rows(), mu.cols());
  for (Eigen::Index x = 0; x < mu.rows(); ++x) out(x, x) = mu.row(x).sum();
  return out;
}

}  // namespace

SecondMoment second_moment_finite_N(const FiniteHmm& model, const Eigen::VectorXd& phi, int n,
                                    const AlphaMatrix& alpha, std::int64_t max_particles) {
  const Label size = alpha.size();
  if (size > max_particles) {
    throw BudgetError("exact second moment tracks N^2 particle pairs; N = " + std::to_string(size) +
                      " exceeds the limit of " + std::to_string(max_particles));
  }
  const Eigen::VectorXd phibar = centered_test_function(model, phi, n);
  const auto s = static_cast<Eigen::Index>(model.state_count());
  const auto pairs = static_cast<std::size_t>(size * size);
  auto slot = [size](Label i, Label j) { return static_cast<std::size_t>((i - 1) * size + (j - 1)); };

  // mu[(i, j)] is the joint (unnormalized) law of the positions of particles
  // i and j weighted by W^i W^j.
  const Eigen::MatrixXd independent = model.initial() * model.initial().transpose();
  std::vector<Eigen::MatrixXd> mu(pairs);
  for (Label i = 1; i <= size; ++i) {
    for (Label j = 1; j <= size; ++j) mu[slot(i, j)] = i == j ? collapse_to_diagonal(independent) : independent;
  }

  std::vector<Eigen::MatrixXd> next(pairs);
  for (int k = 1; k <= n; ++k) {
    const Eigen::MatrixXd q = model.potential(k - 1).asDiagonal() * model.transition();
    for (Label i = 1; i <= size; ++i) {
      for (Label j = 1; j <= size; ++j) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(s, s);
        for (const auto& a : alpha.row(i)) {
          for (const auto& b : alpha.row(j)) acc += a.weight * b.weight * mu[slot(a.column, b.column)];
        }
        const Eigen::MatrixXd moved = q.transpose() * acc * q;
        next[slot(i, j)] = i == j ? collapse_to_diagonal(moved) : moved;
      }
    }
    mu.swap(next);
  }

  const Eigen::MatrixXd outer = phibar * phibar.transpose();
  double total = 0.0;
  for (const auto& m : mu) total += (m.array() * outer.array()).sum();
  SecondMoment out;
  out.particles = size;
  out.second_moment = total / static_cast<double>(size * size);
  out.scaled = static_cast<double>(size) * out.second_moment * std::exp(-2.0 * log_gamma_normalizer(model, n));
  return out;
}

}  // namespace lepf
