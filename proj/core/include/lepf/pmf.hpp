#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace lepf {

/// Probability mass function on the integers offset, offset+1, ...
struct PmfTable {
  std::int64_t offset = 0;
  std::vector<double> probs;

  std::int64_t min_value() const noexcept { return offset; }
  std::int64_t max_value() const noexcept { return offset + static_cast<std::int64_t>(probs.size()) - 1; }

  /// P(X = x); zero outside the stored support.
  double at(std::int64_t x) const noexcept;
  double total() const noexcept;
  double mean() const noexcept;

  /// Throws InvariantError if an entry is negative or the total is off by more
  /// than `tolerance`.
  void check_normalized(double tolerance = 1e-10, const std::string& what = "pmf") const;

  static PmfTable point_mass(std::int64_t x) { return {x, {1.0}}; }
};

/// Total variation distance, half the l1 distance over the union of supports.
double total_variation(const PmfTable& a, const PmfTable& b);

/// log C(n, k) via log-gamma; -inf outside 0 <= k <= n.
double log_choose(std::int64_t n, std::int64_t k);

/// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b) noexcept;

/// Running log-sum-exp.
class LogSum {
 public:
  void add(double log_term) noexcept;
  double value() const noexcept { return value_; }

 private:
  double value_ = -std::numeric_limits<double>::infinity();
};

/// Binomial(n, p) pmf computed in log space.
PmfTable binomial_pmf(std::int64_t n, double p);

}  // namespace lepf
