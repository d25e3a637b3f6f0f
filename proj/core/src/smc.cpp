#include "lepf/smc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "lepf/errors.hpp"

namespace lepf {

namespace {

std::vector<double> cumulative(const Eigen::VectorXd& p) {
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  return cdf;
}

double draw_index(const std::vector<double>& cdf, SplitMix64& rng) {
  const double u = uniform01(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto k = std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1);
  return static_cast<double>(k);
}

constexpr double kRebaseLow = 1e-100;
constexpr double kRebaseHigh = 1e100;

}  // namespace

FiniteFilterModel::FiniteFilterModel(FiniteHmm model)
    : model_(std::move(model)), initial_cdf_(cumulative(model_.initial())) {
  for (int r = 0; r < model_.state_count(); ++r) {
    row_cdf_.push_back(cumulative(model_.transition().row(r).transpose()));
  }
}

double FiniteFilterModel::sample_initial(SplitMix64& rng) const { return draw_index(initial_cdf_, rng); }

double FiniteFilterModel::sample_transition(double x, SplitMix64& rng) const {
  return draw_index(row_cdf_[static_cast<std::size_t>(x)], rng);
}

double FiniteFilterModel::log_potential(int n, double x) const {
  return model_.log_potential(n)[static_cast<Eigen::Index>(x)];
}

ObservedModel::ObservedModel(GenericHmm model, std::vector<double> observations)
    : model_(std::move(model)), observations_(std::move(observations)) {
  if (!model_.observation_free && observations_.empty()) {
    throw ValidationError("model '" + model_.name + "' needs an observation record");
  }
}

double ObservedModel::log_potential(int n, double x) const {
  if (model_.observation_free) return model_.log_likelihood(0.0, x);
  if (n < 0 || static_cast<std::size_t>(n) >= observations_.size()) {
    throw ValidationError("no observation for time " + std::to_string(n));
  }
  return model_.log_likelihood(observations_[static_cast<std::size_t>(n)], x);
}

std::optional<int> ObservedModel::horizon() const {
  if (model_.observation_free) return std::nullopt;
  return static_cast<int>(observations_.size()) - 1;
}

WeightDiagnostics diagnostics_from_group_weights(const std::vector<double>& group_weights, int group_size) {
  if (group_weights.empty()) throw ValidationError("diagnostics need at least one group");
  WeightDiagnostics d;
  d.group_weights = group_weights;
  double sum = 0.0;
  double sum_sq = 0.0;
  double max_w = 0.0;
  for (double w : group_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvariantError("group weight is negative or non-finite");
    sum += w;
    sum_sq += w * w;
    max_w = std::max(max_w, w);
  }
  if (!(sum > 0.0)) throw InvariantError("all group weights vanished");
  const auto m = static_cast<double>(group_weights.size());
  // Scale by the largest weight so the squares cannot overflow.
  const double s = sum / max_w;
  const double s2 = sum_sq / (max_w * max_w);
  d.ess_fraction = s * s / (m * s2);
  d.n_eff = d.ess_fraction * m * group_size;
  d.max_group_weight = max_w / sum;
  d.quad_concentration = std::sqrt(s2) / s;
  if (d.ess_fraction < 1.0 / m * (1.0 - 1e-12)) {
    throw InvariantError("effective sample size fraction " + std::to_string(d.ess_fraction) + " below 1/m");
  }
  return d;
}

ParticleEnsemble::ParticleEnsemble(InteractionScheme scheme, int groups, std::vector<double> positions)
    : scheme_(scheme), groups_(groups), positions_(std::move(positions)) {
  if (groups_ < 1) throw ValidationError("number of groups m must be >= 1");
  if (positions_.size() != static_cast<std::size_t>(groups_) * scheme_.group_size()) {
    throw ValidationError("ensemble needs exactly M*m positions");
  }
  weights_.assign(positions_.size(), 1.0);
}

ParticleEnsemble init_ensemble(const FilterModel& model, const InteractionScheme& scheme, int groups,
                               const RngStream& stream, std::uint64_t replicate) {
  if (groups < 1) throw ValidationError("number of groups m must be >= 1");
  const auto n = static_cast<std::size_t>(groups) * scheme.group_size();
  std::vector<double> positions(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream.particle(replicate, 0, i);
    positions[i] = model.sample_initial(rng);
  }
  return ParticleEnsemble(scheme, groups, std::move(positions));
}

void check_alpha_grouping(const AlphaMatrix& alpha, const InteractionScheme& scheme, int groups) {
  const Label m_size = scheme.group_size();
  if (alpha.size() != m_size * groups) {
    throw ValidationError("alpha is " + std::to_string(alpha.size()) + "x" + std::to_string(alpha.size()) +
                          " but the ensemble has " + std::to_string(m_size * groups) + " particles");
  }
  for (Label i = 1; i <= alpha.size(); ++i) {
    const auto& lead = alpha.row(block_of(i, m_size) * m_size + 1);
    const auto& row = alpha.row(i);
    const bool same = row.size() == lead.size() &&
                      std::equal(row.begin(), row.end(), lead.begin(), [](const AlphaEntry& a, const AlphaEntry& b) {
                        return a.column == b.column && a.weight == b.weight;
                      });
    if (!same) throw ValidationError("alpha row " + std::to_string(i) + " differs from the rest of its group");
  }
}

ParticleEnsemble advance(const ParticleEnsemble& ensemble, const FilterModel& model, const AlphaMatrix& alpha,
                         const RngStream& stream, std::uint64_t replicate) {
  const int m_size = ensemble.scheme_.group_size();
  const int groups = ensemble.groups_;
  const auto size = static_cast<std::size_t>(ensemble.size());
  if (alpha.size() != static_cast<Label>(size)) throw ValidationError("alpha does not match the ensemble size");
  const int n = ensemble.step_;

  // log(W^j g_n(zeta^j)), then shifted so the largest term is 1.
  std::vector<double> lv(size);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < size; ++j) {
    lv[j] = std::log(ensemble.weights_[j]) + model.log_potential(n, ensemble.positions_[j]);
    if (std::isnan(lv[j])) throw NumericError("NaN log weight at particle " + std::to_string(j));
    top = std::max(top, lv[j]);
  }
  if (!std::isfinite(top)) throw NumericError("all particle weights vanished at step " + std::to_string(n));
  std::vector<double> v(size);
  for (std::size_t j = 0; j < size; ++j) v[j] = std::exp(lv[j] - top);

  ParticleEnsemble out = ensemble;
  out.step_ = n + 1;
  out.log_offset_ = ensemble.log_offset_ + top;

  std::vector<double> cdf(static_cast<std::size_t>(m_size));
  std::vector<Label> donors(static_cast<std::size_t>(m_size));
  for (int k = 0; k < groups; ++k) {
    const auto& row = alpha.row(static_cast<Label>(k) * m_size + 1);
    cdf.resize(row.size());
    donors.resize(row.size());
    double acc = 0.0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      acc += row[r].weight * v[static_cast<std::size_t>(row[r].column - 1)];
      cdf[r] = acc;
      donors[r] = row[r].column - 1;
    }
    if (!(acc > 0.0)) throw NumericError("group " + std::to_string(k) + " has no donor weight");
    for (int q = 0; q < m_size; ++q) {
      const auto i = static_cast<std::size_t>(k) * m_size + q;
      out.weights_[i] = acc;
      auto rng = stream.particle(replicate, static_cast<std::uint64_t>(n) + 1, i);
      const double u = uniform01(rng) * acc;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      const auto donor = static_cast<std::size_t>(donors[static_cast<std::size_t>(it - cdf.begin())]);
      out.positions_[i] = model.sample_transition(ensemble.positions_[donor], rng);
    }
  }

  const double w_max = *std::max_element(out.weights_.begin(), out.weights_.end());
  if (w_max < kRebaseLow || w_max > kRebaseHigh) {
    for (auto& w : out.weights_) w /= w_max;
    out.log_offset_ += std::log(w_max);
  }
#ifndef NDEBUG
  for (int k = 0; k < groups; ++k) {
    for (int q = 1; q < m_size; ++q) {
      if (out.weights_[static_cast<std::size_t>(k) * m_size + q] != out.weights_[static_cast<std::size_t>(k) * m_size]) {
        throw InvariantError("weights are not constant within group " + std::to_string(k));
      }
    }
  }
#endif
  return out;
}

TestFn finite_test_function(const Eigen::VectorXd& phi) {
  return [phi](double x) { return phi[static_cast<Eigen::Index>(x)]; };
}

double estimate_prediction(const ParticleEnsemble& ensemble, const TestFn& phi) {
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < ensemble.size(); ++i) {
    const double w = ensemble.weights()[static_cast<std::size_t>(i)];
    num += w * phi(ensemble.positions()[static_cast<std::size_t>(i)]);
    den += w;
  }
  return num / den;
}

double estimate_log_normalizer(const ParticleEnsemble& ensemble) {
  double s = 0.0;
  for (double w : ensemble.weights()) s += w;
  return ensemble.log_offset() + std::log(s / ensemble.size());
}

double estimate_normalizer(const ParticleEnsemble& ensemble) {
  const double log_value = estimate_log_normalizer(ensemble);
  const double value = std::exp(log_value);
  if (value == 0.0 || !std::isfinite(value)) {
    throw NumericError("normalizer estimate exp(" + std::to_string(log_value) + ") is not representable");
  }
  return value;
}

double estimate_updated(const ParticleEnsemble& ensemble, const FilterModel& model, const TestFn& phi) {
  const auto size = static_cast<std::size_t>(ensemble.size());
  std::vector<double> lw(size);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size; ++i) {
    lw[i] = std::log(ensemble.weights()[i]) + model.log_potential(ensemble.step(), ensemble.positions()[i]);
    top = std::max(top, lw[i]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double w = std::exp(lw[i] - top);
    num += w * phi(ensemble.positions()[i]);
    den += w;
  }
  return num / den;
}

WeightDiagnostics diagnostics(const ParticleEnsemble& ensemble) {
  std::vector<double> groups(static_cast<std::size_t>(ensemble.groups()));
  for (int k = 0; k < ensemble.groups(); ++k) groups[static_cast<std::size_t>(k)] = ensemble.group_weight(k);
  return diagnostics_from_group_weights(groups, ensemble.scheme().group_size());
}

namespace {

StepRecord make_record(const RunConfig& config, const ParticleEnsemble& ensemble, std::uint64_t replicate) {
  StepRecord r;
  r.replicate = replicate;
  r.n = ensemble.step();
  r.scheme = config.scheme.kind();
  r.group_size = config.scheme.group_size();
  r.groups = config.groups;
  r.theta = config.scheme.theta();
  r.estimate = config.updated ? estimate_updated(ensemble, *config.model, config.phi)
                              : estimate_prediction(ensemble, config.phi);
  r.normalizer_log = estimate_log_normalizer(ensemble);
  const auto d = diagnostics(ensemble);
  r.ess = d.ess_fraction;
  r.neff = d.n_eff;
  r.max_group_weight = d.max_group_weight;
  r.quad_concentration = d.quad_concentration;
  return r;
}

}  // namespace

std::vector<StepRecord> run_replicates(const RunConfig& config) {
  if (!config.model) throw ValidationError("run configuration has no model");
  if (config.groups < 1) throw ValidationError("number of groups m must be >= 1");
  if (config.steps < 0) throw ValidationError("number of steps must be >= 0");
  if (config.replicates < 1) throw ValidationError("number of replicates must be >= 1");
  if (!config.phi) throw ValidationError("run configuration has no test function");
  if (const auto h = config.model->horizon()) {
    const int needed = config.updated ? config.steps : config.steps - 1;
    if (needed > *h) {
      throw ValidationError("model horizon " + std::to_string(*h) + " is shorter than the requested run");
    }
  }
  const AlphaMatrix alpha = build_alpha(config.scheme, config.groups);
  check_alpha_grouping(alpha, config.scheme, config.groups);
  const RngStream stream(config.seed);

  const std::size_t per_replicate = config.final_only ? 1 : static_cast<std::size_t>(config.steps) + 1;
  std::vector<StepRecord> records(per_replicate * config.replicates);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::uint64_t rep = next.fetch_add(1);
      if (rep >= config.replicates) return;
      try {
        auto slot = records.begin() + static_cast<std::ptrdiff_t>(rep * per_replicate);
        ParticleEnsemble ens = init_ensemble(*config.model, config.scheme, config.groups, stream, rep);
        if (!config.final_only) *slot++ = make_record(config, ens, rep);
        for (int k = 1; k <= config.steps; ++k) {
          ens = advance(ens, *config.model, alpha, stream, rep);
          if (!config.final_only) *slot++ = make_record(config, ens, rep);
        }
        if (config.final_only) *slot = make_record(config, ens, rep);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(config.replicates);
        return;
      }
    }
  };

  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, config.replicates));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

void write_records_csv(const std::vector<StepRecord>& records, std::ostream& out) {
  out << "replicate,n,scheme,M,m,theta,estimate,normalizer_log,ess,neff,max_group_weight,quad_concentration\n";
  const auto old = out.precision(17);
  for (const auto& r : records) {
    out << r.replicate << ',' << r.n << ',' << to_string(r.scheme) << ',' << r.group_size << ',' << r.groups << ','
        << r.theta << ',' << r.estimate << ',' << r.normalizer_log << ',' << r.ess << ',' << r.neff << ','
        << r.max_group_weight << ',' << r.quad_concentration << '\n';
  }
  out.precision(old);
}

}  // namespace lepf
