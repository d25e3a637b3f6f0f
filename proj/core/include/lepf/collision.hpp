#pragma once

#include <cstdint>
#include <vector>

#include "lepf/interaction.hpp"
#include "lepf/pmf.hpp"
#include "lepf/rng.hpp"

namespace lepf {

/// Law of the collision count Z_n of two independent backward chains driven by
/// the limiting interaction matrix of `scheme`, run for n steps.
struct ZLawSpec {
  InteractionScheme scheme;
  int n;

  ZLawSpec(InteractionScheme s, int steps);

  /// Probability that the block offset moves by +1 (and, separately, by -1).
  /// Zero for IBPF, whose offset never moves.
  double q_step() const noexcept;
  /// Probability that the block offset stays put.
  double q_stay() const noexcept;
  /// Collision probability of a step that starts and ends in a shared block.
  double p_coll() const noexcept;
};

/// (block offset, collision flag) of the chain pair at a given backward step.
struct DEState {
  std::int64_t d = 0;
  int e = 0;
  friend bool operator==(const DEState&, const DEState&) = default;
};

/// State of the pair started from labels (u, v).
DEState de_initial(Label u, Label v, int group_size);

struct DETransition {
  DEState to;
  double probability;
};

/// Exact one-step transitions. The law of the next state depends on the
/// current offset only.
std::vector<DETransition> de_transitions(const ZLawSpec& spec, DEState from);

/// Samples one step of the (D, E) chain.
DEState de_step(const ZLawSpec& spec, DEState from, SplitMix64& rng);

/// Binomial(n, 1/M).
PmfTable z_pmf_ibpf(int n, int group_size);

/// Number of returns to zero of a symmetric simple random walk in n steps:
/// p(x) = 2^x C(2h - x, h) / 2^(2h), h = floor(n/2), x = 0..h.
PmfTable rwz_pmf(int n);

/// Beta-binomial(n, a, b). b = 0 is accepted only with a = 1 and gives the
/// point mass at n.
PmfTable beta_binomial_pmf(int n, double a, double b);

using RwzLaw = PmfTable (*)(int);

/// Law of the number B of lazy steps taken at offset zero, obtained by mixing
/// V ~ Binomial(n, q_stay), S | V ~ RWZ(n - V) and B | V, S ~ BetaBin(V, S+1, n-V-S).
/// `rwz` replaces the return-count law, which lets tests inject a fault.
PmfTable b_pmf_lepf(int n, int group_size, int theta, RwzLaw rwz = rwz_pmf);

/// Z_n for the LEPF through the B mixture, Z | B ~ Binomial(B, p_coll). O(n^4).
PmfTable z_pmf_lepf_mixture(int n, int group_size, int theta, RwzLaw rwz = rwz_pmf);

/// Z_n for the LEPF by dynamic programming over (offset, count). O(n^3).
PmfTable z_pmf_lepf_dp(int n, int group_size, int theta);

/// Z_n for either scheme started from block offset d0.
PmfTable z_pmf_dp(const ZLawSpec& spec, std::int64_t d0 = 0);

/// log E[exp(t Z_n)] started from block offset d0. For the LEPF this is a
/// dynamic program over the offset only, O(n^2); for the IBPF it is closed form.
double z_mgf(const ZLawSpec& spec, double t, std::int64_t d0 = 0);

/// log E[exp(t Z_k)] for k = 0..n_max from a single pass, O(n_max^2).
std::vector<double> z_mgf_curve(const InteractionScheme& scheme, int n_max, double t, std::int64_t d0 = 0);

struct ChainSample {
  /// Z_n = sum over p < n of 1[I_p = J_p].
  int collisions = 0;
  /// eps[p] = 1[I_p = J_p] for p = 0..n; the chain starts at p = n.
  std::vector<std::uint8_t> eps;
};

/// Runs the backward chains from (I_n, J_n) = (u, v), drawing predecessors
/// uniformly from the windows of the limiting interaction matrix.
ChainSample sample_ij_chain(const InteractionScheme& scheme, int n, Label u, Label v, SplitMix64& rng);

/// Empirical pmf of Z_n over `samples` runs of sample_ij_chain.
PmfTable sample_z_pmf(const InteractionScheme& scheme, int n, Label u, Label v, std::int64_t samples,
                      SplitMix64& rng);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness-of-fit of an empirical pmf (built from `sample_count`
/// draws) against `expected`. Cells with expected count below `min_expected`
/// are pooled into their neighbour.
ChiSquareResult chi_square_gof(const PmfTable& empirical, std::int64_t sample_count, const PmfTable& expected,
                               double min_expected = 5.0);

}  // namespace lepf
