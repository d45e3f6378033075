// Pair-kernel throughput: the plain reference loop against the symmetric
// kernels, serial and OpenMP. Sizes are sample sizes n.

#include <benchmark/benchmark.h>

#include <vector>

#include "dtreg/loss.hpp"
#include "dtreg/optimizer.hpp"
#include "dtreg/reference.hpp"
#include "dtreg/simlab.hpp"

namespace {

dtreg::TruncatedSample make_sample(std::size_t n) {
  dtreg::SimDesign d;
  d.n = n;
  d.lower_const = -2.0757;
  d.upper_const = 4.0683;
  auto rng = dtreg::make_stream(7, n);
  return dtreg::generate_dataset(d, rng);
}

const std::vector<double> kBeta = {0.9, 1.1};

void BM_ReferenceLoss(benchmark::State& state) {
  const auto s = make_sample(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dtreg::reference::loss(s, kBeta));
  state.SetComplexityN(state.range(0));
}

void BM_KernelLoss(benchmark::State& state, dtreg::Exec exec) {
  const auto s = make_sample(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dtreg::loss(s, kBeta, exec));
  state.SetComplexityN(state.range(0));
}

void BM_ReferenceLogRank(benchmark::State& state) {
  const auto s = make_sample(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dtreg::reference::weighted_loss(s, kBeta, kBeta, dtreg::WeightScheme::LogRank));
}

void BM_KernelLogRank(benchmark::State& state, dtreg::Exec exec) {
  const auto s = make_sample(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dtreg::weighted_loss(s, kBeta, kBeta, dtreg::WeightScheme::LogRank, nullptr, exec));
}

// End to end: one Wilcoxon fit, the unit of work repeated B times per replicate.
void BM_Fit(benchmark::State& state) {
  const auto s = make_sample(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dtreg::fit(s).beta_hat);
}

}  // namespace

BENCHMARK(BM_ReferenceLoss)->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK_CAPTURE(BM_KernelLoss, serial, dtreg::Exec::Serial)
    ->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK_CAPTURE(BM_KernelLoss, parallel, dtreg::Exec::Parallel)
    ->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK(BM_ReferenceLogRank)->Arg(200)->Arg(1000);
BENCHMARK_CAPTURE(BM_KernelLogRank, serial, dtreg::Exec::Serial)->Arg(200)->Arg(1000);
BENCHMARK_CAPTURE(BM_KernelLogRank, parallel, dtreg::Exec::Parallel)->Arg(200)->Arg(1000);
BENCHMARK(BM_Fit)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
