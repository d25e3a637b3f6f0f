#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <lepf/collision.hpp>
#include <lepf/hmm.hpp>
#include <lepf/interaction.hpp>
#include <lepf/rng.hpp>
#include <lepf/smc.hpp>
#include <lepf/variance.hpp>

namespace {

lepf::InteractionScheme scheme_for(int kind, int group_size) {
  return kind == 0 ? lepf::InteractionScheme::lepf(group_size, 1) : lepf::InteractionScheme::ibpf(group_size);
}

// Particles moved per second through one filter step.
void BM_Advance(benchmark::State& state) {
  const int group_size = 20;
  const int groups = static_cast<int>(state.range(1));
  const auto scheme = scheme_for(static_cast<int>(state.range(0)), group_size);
  const lepf::FiniteFilterModel model(lepf::binary_toy(0.25, 0.1));
  const auto alpha = lepf::build_alpha(scheme, groups);
  const lepf::RngStream stream(7);
  auto ensemble = lepf::init_ensemble(model, scheme, groups, stream);
  for (auto _ : state) {
    ensemble = lepf::advance(ensemble, model, alpha, stream);
    benchmark::DoNotOptimize(ensemble.weights().data());
  }
  state.SetItemsProcessed(state.iterations() * ensemble.size());
  state.SetLabel(scheme.describe());
}
BENCHMARK(BM_Advance)->ArgsProduct({{0, 1}, {50, 500}});

void BM_ZMgf(benchmark::State& state) {
  const lepf::ZLawSpec spec(lepf::InteractionScheme::lepf(10, 1), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lepf::z_mgf(spec, 0.2));
}
BENCHMARK(BM_ZMgf)->Arg(100)->Arg(1000)->Arg(4000);

void BM_ZPmfDp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lepf::z_pmf_lepf_dp(n, 10, 1));
}
BENCHMARK(BM_ZPmfDp)->Arg(50)->Arg(200);

void BM_Theorem1(benchmark::State& state) {
  Eigen::VectorXd pi0(2);
  pi0 << 0.3, 0.7;
  Eigen::MatrixXd f(2, 2);
  f << 0.9, 0.1, 0.2, 0.8;
  Eigen::VectorXd g(2);
  g << 0.6, 1.5;
  const lepf::FiniteHmm model(pi0, f, g);
  Eigen::VectorXd phi(2);
  phi << 1.0, -0.5;
  const auto scheme = lepf::InteractionScheme::lepf(2, 1);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lepf::sigma2_theorem1(model, phi, n, scheme).sigma2);
}
BENCHMARK(BM_Theorem1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
