#include "lepf/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lepf/errors.hpp"

namespace lepf {

double PmfTable::at(std::int64_t x) const noexcept {
  if (x < offset || x > max_value()) return 0.0;
  return probs[static_cast<std::size_t>(x - offset)];
}

double PmfTable::total() const noexcept {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

double PmfTable::mean() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += probs[i] * static_cast<double>(offset + static_cast<std::int64_t>(i));
  return s;
}

void PmfTable::check_normalized(double tolerance, const std::string& what) const {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      throw InvariantError(what + ": invalid probability at " + std::to_string(offset + static_cast<std::int64_t>(i)));
    }
  }
  const double t = total();
  if (std::abs(t - 1.0) > tolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": probabilities sum to " << t;
    throw InvariantError(msg.str());
  }
}

double total_variation(const PmfTable& a, const PmfTable& b) {
  const std::int64_t lo = std::min(a.min_value(), b.min_value());
  const std::int64_t hi = std::max(a.max_value(), b.max_value());
  double s = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) s += std::abs(a.at(x) - b.at(x));
  return 0.5 * s;
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double log_add(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void LogSum::add(double log_term) noexcept { value_ = log_add(value_, log_term); }

PmfTable binomial_pmf(std::int64_t n, double p) {
  if (n < 0) throw ValidationError("binomial requires n >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("binomial requires 0 <= p <= 1");
  PmfTable out{0, std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0)};
  if (p == 0.0) {
    out.probs.front() = 1.0;
    return out;
  }
  if (p == 1.0) {
    out.probs.back() = 1.0;
    return out;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  for (std::int64_t k = 0; k <= n; ++k) {
    out.probs[static_cast<std::size_t>(k)] =
        std::exp(log_choose(n, k) + static_cast<double>(k) * lp + static_cast<double>(n - k) * lq);
  }
  return out;
}

}  // namespace lepf
