#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <lepf/collision.hpp>

namespace lepf::checks {

struct CheckLine {
  /// Criterion number, with a letter suffix for sub-checks ("12a").
  std::string id;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 20240917;
  unsigned threads = 0;
  /// Return-count law fed to the mixture route; swapped out by fault injection.
  RwzLaw rwz = rwz_pmf;
};

inline constexpr int kCriterionCount = 14;

/// rwz_pmf with its normalizing constant off by 0.1%; used by selftest fault injection.
PmfTable faulty_rwz_pmf(int n);

/// Runs acceptance criterion `k` (1..14) and returns its result lines.
std::vector<CheckLine> run_criterion(int k, const CheckOptions& options = {});

/// Prints one line per result; returns true when all passed.
bool print_lines(const std::vector<CheckLine>& lines, std::ostream& out);

/// Trapezoid rule for pi0(g) and pi0(g^2) of the Gaussian toy on [-10, 10]
/// with `points` nodes; returns log(pi0(g^2) / pi0(g)^2).
double gaussian_toy_t0_quadrature(int points = 100000);

}  // namespace lepf::checks
