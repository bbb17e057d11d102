// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/perf/perf.hpp>
#include <iotln/sim/trials.hpp>

#include <benchmark/benchmark.h>

using namespace iotln;

namespace {

void BM_ConservationSerial(benchmark::State& state)
{
    for (auto _ : state)
        benchmark::DoNotOptimize(sim::run_trials_serial(sim::TrialKind::Conservation, 1,
                                                        static_cast<std::size_t>(state.range(0)), 1'000));
}
BENCHMARK(BM_ConservationSerial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ConservationParallel(benchmark::State& state)
{
    for (auto _ : state)
        benchmark::DoNotOptimize(sim::run_trials_parallel(sim::TrialKind::Conservation, 1,
                                                          static_cast<std::size_t>(state.range(0)), 1'000));
}
BENCHMARK(BM_ConservationParallel)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SignatureFuzzParallel(benchmark::State& state)
{
    for (auto _ : state)
        benchmark::DoNotOptimize(sim::run_trials_parallel(sim::TrialKind::SignatureFuzz, 1, 4, 250));
}
BENCHMARK(BM_SignatureFuzzParallel)->Unit(benchmark::kMillisecond);

void BM_TollTable(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(perf::toll_table());
}
BENCHMARK(BM_TollTable);

} // namespace

BENCHMARK_MAIN();
