#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "fas/channel.hpp"
#include "fas/outage.hpp"

namespace {

std::shared_ptr<const fas::SpectralModel> scenario(int n)
{
    return std::make_shared<const fas::SpectralModel>(fas::make_spectral_model({n, 1.0, 10.0, 0.0}));
}

void BM_SpectralModel(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(fas::make_spectral_model({n, 1.0, 10.0, 0.0}));
}
BENCHMARK(BM_SpectralModel)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ExactSampler(benchmark::State& state)
{
    const auto sp = scenario(static_cast<int>(state.range(0)));
    const std::size_t draws = 10000;
    for (auto _ : state)
        benchmark::DoNotOptimize(fas::sample_exact_max(*sp, draws, 1, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(draws));
}
BENCHMARK(BM_ExactSampler)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Stage1Curve(benchmark::State& state)
{
    const auto sp = scenario(100);
    const fas::Stage1Model m = fas::make_stage1_model(sp, static_cast<int>(state.range(0)));
    std::vector<double> grid(64);
    for (std::size_t j = 0; j < grid.size(); ++j)
        grid[j] = 6.0 * static_cast<double>(j + 1) / static_cast<double>(grid.size());
    const std::size_t draws = 2000;
    for (auto _ : state)
        benchmark::DoNotOptimize(fas::stage1_cdf_curve(m, grid, draws, 1, 1, 1e-12));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(draws));
}
BENCHMARK(BM_Stage1Curve)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Stage2Outage(benchmark::State& state)
{
    const fas::FasConfig c{100, 1.0, 10.0, 0.0};
    const fas::Stage2Model m = fas::make_stage2_model(fas::make_stage1_model(scenario(100), 4), 23);
    const fas::OutageQuery q = fas::OutageQuery::from_config(c);
    for (auto _ : state)
        benchmark::DoNotOptimize(fas::stage2_outage(m, q));
}
BENCHMARK(BM_Stage2Outage)->Unit(benchmark::kMillisecond);

void BM_ReferenceOutage(benchmark::State& state)
{
    const fas::FasConfig c{static_cast<int>(state.range(0)), 1.0, 1.0, 0.0};
    const fas::OutageQuery q = fas::OutageQuery::from_config(c);
    for (auto _ : state)
        benchmark::DoNotOptimize(fas::reference_outage_fas1(c, q));
}
BENCHMARK(BM_ReferenceOutage)->Arg(10)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace
