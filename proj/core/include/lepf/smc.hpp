#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lepf/hmm.hpp"
#include "lepf/interaction.hpp"
#include "lepf/rng.hpp"

namespace lepf {

/// What the particle filter needs from a model: samplers for the prior
/// dynamics and the log potential log g_n(x). Finite-state positions are
/// stored as doubles holding the state index.
class FilterModel {
 public:
  virtual ~FilterModel() = default;
  virtual double sample_initial(SplitMix64& rng) const = 0;
  virtual double sample_transition(double x, SplitMix64& rng) const = 0;
  virtual double log_potential(int n, double x) const = 0;
  /// Largest n for which log_potential is defined; empty when unbounded.
  virtual std::optional<int> horizon() const { return std::nullopt; }
};

class FiniteFilterModel final : public FilterModel {
 public:
  explicit FiniteFilterModel(FiniteHmm model);

  const FiniteHmm& hmm() const noexcept { return model_; }
  double sample_initial(SplitMix64& rng) const override;
  double sample_transition(double x, SplitMix64& rng) const override;
  double log_potential(int n, double x) const override;
  std::optional<int> horizon() const override { return model_.horizon(); }

 private:
  FiniteHmm model_;
  std::vector<double> initial_cdf_;
  std::vector<std::vector<double>> row_cdf_;
};

/// A GenericHmm paired with a fixed observation record y_0, y_1, ...
/// Observation-free models ignore the record and have no horizon.
class ObservedModel final : public FilterModel {
 public:
  ObservedModel(GenericHmm model, std::vector<double> observations);

  const GenericHmm& hmm() const noexcept { return model_; }
  const std::vector<double>& observations() const noexcept { return observations_; }
  double sample_initial(SplitMix64& rng) const override { return model_.sample_initial(rng); }
  double sample_transition(double x, SplitMix64& rng) const override { return model_.sample_transition(x, rng); }
  double log_potential(int n, double x) const override;
  std::optional<int> horizon() const override;

 private:
  GenericHmm model_;
  std::vector<double> observations_;
};

struct WeightDiagnostics {
  double ess_fraction = 1.0;
  double n_eff = 0.0;
  double max_group_weight = 0.0;
  double quad_concentration = 0.0;
  std::vector<double> group_weights;
};

/// Diagnostics from per-group weights (one value per group, shared by its M
/// particles). Throws InvariantError if the effective sample size fraction
/// falls below 1/m.
WeightDiagnostics diagnostics_from_group_weights(const std::vector<double>& group_weights, int group_size);

/// N = M m particles with weights. Weights are stored relative to a shared
/// log offset: the actual weight of particle i is weight(i) * exp(log_offset()).
class ParticleEnsemble {
 public:
  ParticleEnsemble(InteractionScheme scheme, int groups, std::vector<double> positions);

  const InteractionScheme& scheme() const noexcept { return scheme_; }
  int groups() const noexcept { return groups_; }
  int size() const noexcept { return static_cast<int>(positions_.size()); }
  int step() const noexcept { return step_; }

  const std::vector<double>& positions() const noexcept { return positions_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double log_offset() const noexcept { return log_offset_; }

  /// Weight shared by the particles of `group` (0-based), relative to the offset.
  double group_weight(int group) const { return weights_.at(static_cast<std::size_t>(group) * scheme_.group_size()); }

 private:
  friend ParticleEnsemble advance(const ParticleEnsemble&, const FilterModel&, const AlphaMatrix&,
                                  const RngStream&, std::uint64_t);

  InteractionScheme scheme_;
  int groups_;
  int step_ = 0;
  std::vector<double> positions_;
  std::vector<double> weights_;
  double log_offset_ = 0.0;
};

/// W = 1 and positions drawn iid from the initial law using the particle
/// streams of step 0.
ParticleEnsemble init_ensemble(const FilterModel& model, const InteractionScheme& scheme, int groups,
                               const RngStream& stream, std::uint64_t replicate = 0);

/// One step of the alpha-interaction filter: new weights are the alpha-weighted
/// sums of W g, and each new particle picks a donor j with probability
/// proportional to alpha^{ij} W^j g(zeta^j), then moves by the prior kernel.
/// Particle i at the new step draws only from stream.particle(replicate, n+1, i).
ParticleEnsemble advance(const ParticleEnsemble& ensemble, const FilterModel& model, const AlphaMatrix& alpha,
                         const RngStream& stream, std::uint64_t replicate = 0);

/// Checks that alpha has the size of the ensemble and that rows within a group
/// coincide, which the group-constant weight update relies on.
void check_alpha_grouping(const AlphaMatrix& alpha, const InteractionScheme& scheme, int groups);

using TestFn = std::function<double(double)>;

/// phi as a function of the stored position, for finite-state values phi[x].
TestFn finite_test_function(const Eigen::VectorXd& phi);

double estimate_prediction(const ParticleEnsemble& ensemble, const TestFn& phi);
double estimate_log_normalizer(const ParticleEnsemble& ensemble);
double estimate_normalizer(const ParticleEnsemble& ensemble);
double estimate_updated(const ParticleEnsemble& ensemble, const FilterModel& model, const TestFn& phi);
WeightDiagnostics diagnostics(const ParticleEnsemble& ensemble);

struct StepRecord {
  std::uint64_t replicate = 0;
  int n = 0;
  SchemeKind scheme = SchemeKind::kLepf;
  int group_size = 0;
  int groups = 0;
  int theta = 0;
  double estimate = 0.0;
  double normalizer_log = 0.0;
  double ess = 1.0;
  double neff = 0.0;
  double max_group_weight = 0.0;
  double quad_concentration = 0.0;
};

struct RunConfig {
  std::shared_ptr<const FilterModel> model;
  InteractionScheme scheme = InteractionScheme::ibpf(1);
  int groups = 1;
  /// Records are produced for n = 0..steps.
  int steps = 0;
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  TestFn phi = [](double x) { return x; };
  /// Report the updated-filter estimate instead of the prediction filter.
  bool updated = false;
  /// Only keep records of the final step.
  bool final_only = false;
};

/// Runs independent replicates (concurrently when threads > 1). Records are
/// ordered by replicate, then step, and do not depend on the thread count.
std::vector<StepRecord> run_replicates(const RunConfig& config);

void write_records_csv(const std::vector<StepRecord>& records, std::ostream& out);

}  // namespace lepf
