#include "lepf/collision.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "lepf/errors.hpp"

namespace lepf {

namespace {

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

void require_steps(int n) {
  if (n < 0) throw ValidationError("number of steps n must be >= 0");
}

}  // namespace

ZLawSpec::ZLawSpec(InteractionScheme s, int steps) : scheme(s), n(steps) { require_steps(steps); }

double ZLawSpec::q_step() const noexcept {
  if (scheme.kind() == SchemeKind::kIbpf) return 0.0;
  const double m = scheme.group_size();
  const double th = scheme.theta();
  return th * (m - th) / (m * m);
}

double ZLawSpec::q_stay() const noexcept {
  if (scheme.kind() == SchemeKind::kIbpf) return 1.0;
  const double m = scheme.group_size();
  const double th = scheme.theta();
  return ((m - th) * (m - th) + th * th) / (m * m);
}

double ZLawSpec::p_coll() const noexcept {
  const double m = scheme.group_size();
  if (scheme.kind() == SchemeKind::kIbpf) return 1.0 / m;
  const double th = scheme.theta();
  return m / ((m - th) * (m - th) + th * th);
}

DEState de_initial(Label u, Label v, int group_size) {
  if (group_size < 1) throw ValidationError("M must be >= 1");
  return {block_of(u, group_size) - block_of(v, group_size), u == v ? 1 : 0};
}

std::vector<DETransition> de_transitions(const ZLawSpec& spec, DEState from) {
  std::vector<DETransition> out;
  const double stay = spec.q_stay();
  const double step = spec.q_step();
  if (step > 0.0) {
    out.push_back({{from.d - 1, 0}, step});
    out.push_back({{from.d + 1, 0}, step});
  }
  if (from.d == 0) {
    const double p = spec.p_coll();
    out.push_back({{0, 1}, stay * p});
    if (p < 1.0) out.push_back({{0, 0}, stay * (1.0 - p)});
  } else {
    out.push_back({{from.d, 0}, stay});
  }
  return out;
}

DEState de_step(const ZLawSpec& spec, DEState from, SplitMix64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const auto moves = de_transitions(spec, from);
  for (const auto& t : moves) {
    acc += t.probability;
    if (u < acc) return t.to;
  }
  return moves.back().to;
}

PmfTable z_pmf_ibpf(int n, int group_size) {
  require_steps(n);
  if (group_size < 1) throw ValidationError("M must be >= 1");
  return binomial_pmf(n, 1.0 / group_size);
}

PmfTable rwz_pmf(int n) {
  require_steps(n);
  const std::int64_t h = n / 2;
  PmfTable out{0, std::vector<double>(static_cast<std::size_t>(h) + 1)};
  const double ln2 = std::log(2.0);
  for (std::int64_t x = 0; x <= h; ++x) {
    out.probs[static_cast<std::size_t>(x)] =
        std::exp(static_cast<double>(x - 2 * h) * ln2 + log_choose(2 * h - x, h));
  }
  return out;
}

PmfTable beta_binomial_pmf(int n, double a, double b) {
  require_steps(n);
  if (!(a > 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("beta-binomial requires a > 0 and b >= 0");
  }
  if (b == 0.0 && a != 1.0) throw ValidationError("beta-binomial with b = 0 is defined only for a = 1");
  if (n == 0) return PmfTable::point_mass(0);
  if (b == 0.0) return PmfTable::point_mass(n);
  PmfTable out{0, std::vector<double>(static_cast<std::size_t>(n) + 1)};
  const double base = lbeta(a, b);
  for (int k = 0; k <= n; ++k) {
    out.probs[static_cast<std::size_t>(k)] = std::exp(log_choose(n, k) + lbeta(k + a, n - k + b) - base);
  }
  return out;
}

PmfTable b_pmf_lepf(int n, int group_size, int theta, RwzLaw rwz) {
  const ZLawSpec spec(InteractionScheme::lepf(group_size, theta), n);
  const PmfTable v_law = binomial_pmf(n, spec.q_stay());
  std::vector<double> b(static_cast<std::size_t>(n) + 1, 0.0);
  for (int v = 0; v <= n; ++v) {
    const double pv = v_law.at(v);
    if (pv == 0.0) continue;
    const PmfTable s_law = rwz(n - v);
    for (int s = 0; s <= s_law.max_value(); ++s) {
      const double ps = pv * s_law.at(s);
      if (ps == 0.0) continue;
      // With s = n - v every step is lazy (s = 0, v = n); the urn starts with no
      // "away" ball and all v lazy steps happen at offset zero.
      const int away = n - v - s;
      const PmfTable b_law = away == 0 ? PmfTable::point_mass(v) : beta_binomial_pmf(v, s + 1.0, away);
      for (std::int64_t k = b_law.min_value(); k <= b_law.max_value(); ++k) {
        b[static_cast<std::size_t>(k)] += ps * b_law.at(k);
      }
    }
  }
  return {0, std::move(b)};
}

PmfTable z_pmf_lepf_mixture(int n, int group_size, int theta, RwzLaw rwz) {
  const ZLawSpec spec(InteractionScheme::lepf(group_size, theta), n);
  const PmfTable b_law = b_pmf_lepf(n, group_size, theta, rwz);
  std::vector<double> z(static_cast<std::size_t>(n) + 1, 0.0);
  for (int b = 0; b <= n; ++b) {
    const double pb = b_law.at(b);
    if (pb == 0.0) continue;
    const PmfTable cond = binomial_pmf(b, spec.p_coll());
    for (int k = 0; k <= b; ++k) z[static_cast<std::size_t>(k)] += pb * cond.at(k);
  }
  return {0, std::move(z)};
}

PmfTable z_pmf_lepf_dp(int n, int group_size, int theta) {
  return z_pmf_dp(ZLawSpec(InteractionScheme::lepf(group_size, theta), n), 0);
}

PmfTable z_pmf_dp(const ZLawSpec& spec, std::int64_t d0) {
  const int n = spec.n;
  if (spec.scheme.kind() == SchemeKind::kIbpf) {
    return d0 == 0 ? z_pmf_ibpf(n, spec.scheme.group_size()) : PmfTable::point_mass(0);
  }
  if (std::llabs(d0) > n) return PmfTable::point_mass(0);
  // Offsets stay within [d0 - n, d0 + n]; index r = d - d0 + n.
  const std::int64_t width = 2 * static_cast<std::int64_t>(n) + 1;
  const auto cols = static_cast<std::size_t>(n) + 1;
  std::vector<double> cur(static_cast<std::size_t>(width) * cols, 0.0);
  std::vector<double> next(cur.size());
  auto at = [cols](std::vector<double>& v, std::int64_t r, int z) -> double& {
    return v[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(z)];
  };
  at(cur, n, 0) = 1.0;
  const double stay = spec.q_stay();
  const double step = spec.q_step();
  const double hit = stay * spec.p_coll();
  const double miss = stay - hit;
  const std::int64_t zero_row = n - d0;
  for (int k = 1; k <= n; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    const std::int64_t lo = std::max<std::int64_t>(0, n - (k - 1));
    const std::int64_t hi = std::min<std::int64_t>(width - 1, n + (k - 1));
    for (std::int64_t r = lo; r <= hi; ++r) {
      for (int z = 0; z < k; ++z) {
        const double p = at(cur, r, z);
        if (p == 0.0) continue;
        at(next, r - 1, z) += step * p;
        at(next, r + 1, z) += step * p;
        if (r == zero_row) {
          at(next, r, z + 1) += hit * p;
          at(next, r, z) += miss * p;
        } else {
          at(next, r, z) += stay * p;
        }
      }
    }
    cur.swap(next);
  }
  std::vector<double> z(cols, 0.0);
  for (std::int64_t r = 0; r < width; ++r) {
    for (std::size_t c = 0; c < cols; ++c) z[c] += cur[static_cast<std::size_t>(r) * cols + c];
  }
  return {0, std::move(z)};
}

double z_mgf(const ZLawSpec& spec, double t, std::int64_t d0) {
  const int n = spec.n;
  if (!std::isfinite(t)) throw ValidationError("z_mgf requires a finite t");
  if (t == 0.0) return 0.0;
  const double boost = std::expm1(t) * spec.p_coll();
  if (spec.scheme.kind() == SchemeKind::kIbpf) {
    return d0 == 0 ? static_cast<double>(n) * std::log1p(boost) : 0.0;
  }
  if (std::llabs(d0) > n) return 0.0;
  // Mass at offsets that can no longer reach zero in the remaining steps
  // contributes a factor 1 from then on, so it is moved to `settled`.
  const double stay = spec.q_stay();
  const double step = spec.q_step();
  std::vector<double> w(2 * static_cast<std::size_t>(n) + 3, 0.0);
  std::vector<double> next(w.size(), 0.0);
  const auto centre = static_cast<std::int64_t>(n) + 1;
  auto idx = [centre](std::int64_t d) { return static_cast<std::size_t>(d + centre); };
  w[idx(d0)] = 1.0;
  double settled = 0.0;
  double log_scale = 0.0;
  std::int64_t reach = std::llabs(d0);
  for (int k = 1; k <= n; ++k) {
    const std::int64_t remaining = n - k;
    const std::int64_t new_reach = std::min<std::int64_t>(reach + 1, remaining);
    for (std::int64_t d = -new_reach; d <= new_reach; ++d) next[idx(d)] = 0.0;
    for (std::int64_t d = -reach; d <= reach; ++d) {
      const double p = w[idx(d)];
      if (p == 0.0) continue;
      const double self = d == 0 ? stay * (1.0 + boost) : stay;
      for (const auto& [to, q] : {std::pair{d - 1, step}, std::pair{d, self}, std::pair{d + 1, step}}) {
        if (std::llabs(to) > remaining) {
          settled += q * p;
        } else {
          next[idx(to)] += q * p;
        }
      }
    }
    for (std::int64_t d = -reach; d <= reach; ++d) {
      if (std::llabs(d) > new_reach) w[idx(d)] = 0.0;
    }
    reach = new_reach;
    double total = settled;
    for (std::int64_t d = -reach; d <= reach; ++d) {
      w[idx(d)] = next[idx(d)];
      total += w[idx(d)];
    }
    if (total > 1e200 || total < 1e-200) {
      if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("z_mgf lost all mass");
      for (std::int64_t d = -reach; d <= reach; ++d) w[idx(d)] /= total;
      settled /= total;
      log_scale += std::log(total);
    }
  }
  double total = settled;
  for (std::int64_t d = -reach; d <= reach; ++d) total += w[idx(d)];
  return log_scale + std::log(total);
}

std::vector<double> z_mgf_curve(const InteractionScheme& scheme, int n_max, double t, std::int64_t d0) {
  require_steps(n_max);
  if (!std::isfinite(t)) throw ValidationError("z_mgf_curve requires a finite t");
  const ZLawSpec spec(scheme, n_max);
  std::vector<double> curve(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double boost = std::expm1(t) * spec.p_coll();
  if (scheme.kind() == SchemeKind::kIbpf) {
    if (d0 == 0) {
      for (int k = 0; k <= n_max; ++k) curve[static_cast<std::size_t>(k)] = k * std::log1p(boost);
    }
    return curve;
  }
  const std::int64_t half = std::llabs(d0) + n_max + 1;
  std::vector<double> w(2 * static_cast<std::size_t>(half) + 1, 0.0);
  std::vector<double> next(w.size(), 0.0);
  auto idx = [half](std::int64_t d) { return static_cast<std::size_t>(d + half); };
  w[idx(d0)] = 1.0;
  const double stay = spec.q_stay();
  const double step = spec.q_step();
  double log_scale = 0.0;
  std::int64_t lo = d0;
  std::int64_t hi = d0;
  for (int k = 1; k <= n_max; ++k) {
    for (std::int64_t d = lo - 1; d <= hi + 1; ++d) next[idx(d)] = 0.0;
    for (std::int64_t d = lo; d <= hi; ++d) {
      const double p = w[idx(d)];
      next[idx(d - 1)] += step * p;
      next[idx(d + 1)] += step * p;
      next[idx(d)] += (d == 0 ? stay * (1.0 + boost) : stay) * p;
    }
    --lo;
    ++hi;
    double total = 0.0;
    for (std::int64_t d = lo; d <= hi; ++d) {
      w[idx(d)] = next[idx(d)];
      total += w[idx(d)];
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("z_mgf_curve lost all mass");
    curve[static_cast<std::size_t>(k)] = log_scale + std::log(total);
    if (total > 1e200 || total < 1e-200) {
      for (std::int64_t d = lo; d <= hi; ++d) w[idx(d)] /= total;
      log_scale += std::log(total);
    }
  }
  return curve;
}

ChainSample sample_ij_chain(const InteractionScheme& scheme, int n, Label u, Label v, SplitMix64& rng) {
  require_steps(n);
  ChainSample out;
  out.eps.assign(static_cast<std::size_t>(n) + 1, 0);
  const auto m = static_cast<std::uint64_t>(scheme.group_size());
  Label i = u;
  Label j = v;
  out.eps[static_cast<std::size_t>(n)] = i == j ? 1 : 0;
  for (int p = n - 1; p >= 0; --p) {
    i = alpha_infinity_row(scheme, i).first + static_cast<Label>(uniform_index(rng, m));
    j = alpha_infinity_row(scheme, j).first + static_cast<Label>(uniform_index(rng, m));
    if (i == j) {
      out.eps[static_cast<std::size_t>(p)] = 1;
      ++out.collisions;
    }
  }
  return out;
}

PmfTable sample_z_pmf(const InteractionScheme& scheme, int n, Label u, Label v, std::int64_t samples,
                      SplitMix64& rng) {
  if (samples < 1) throw ValidationError("sample count must be >= 1");
  std::vector<double> counts(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::int64_t s = 0; s < samples; ++s) counts[static_cast<std::size_t>(sample_ij_chain(scheme, n, u, v, rng).collisions)] += 1.0;
  for (auto& c : counts) c /= static_cast<double>(samples);
  return {0, std::move(counts)};
}

ChiSquareResult chi_square_gof(const PmfTable& empirical, std::int64_t sample_count, const PmfTable& expected,
                               double min_expected) {
  if (sample_count < 1) throw ValidationError("chi-square test needs at least one sample");
  const std::int64_t lo = std::min(empirical.min_value(), expected.min_value());
  const std::int64_t hi = std::max(empirical.max_value(), expected.max_value());
  const auto total = static_cast<double>(sample_count);
  std::vector<std::pair<double, double>> cells;  // (observed, expected)
  double obs_acc = 0.0;
  double exp_acc = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    obs_acc += empirical.at(x) * total;
    exp_acc += expected.at(x) * total;
    if (exp_acc >= min_expected) {
      cells.emplace_back(obs_acc, exp_acc);
      obs_acc = exp_acc = 0.0;
    }
  }
  if (!cells.empty()) {
    cells.back().first += obs_acc;
    cells.back().second += exp_acc;
  } else {
    cells.emplace_back(obs_acc, exp_acc);
  }
  ChiSquareResult result;
  for (const auto& [o, e] : cells) {
    if (e > 0.0) {
      result.statistic += (o - e) * (o - e) / e;
    } else if (o > 0.0) {
      result.statistic = std::numeric_limits<double>::infinity();
    }
  }
  result.dof = static_cast<int>(cells.size()) - 1;
  if (result.dof < 1) {
    result.p_value = std::isfinite(result.statistic) ? 1.0 : 0.0;
  } else if (!std::isfinite(result.statistic)) {
    result.p_value = 0.0;
  } else {
    const boost::math::chi_squared dist(result.dof);
    result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
  }
  return result;
}

}  // namespace lepf
