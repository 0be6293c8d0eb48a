#include <vector>

#include <benchmark/benchmark.h>

#include "fas/specfun.hpp"

namespace {

void BM_BesselJ0(benchmark::State& state)
{
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fas::bessel_j0(x));
        x = x > 50.0 ? 0.0 : x + 0.37;
    }
}
BENCHMARK(BM_BesselJ0);

void BM_MarcumScalar(benchmark::State& state)
{
    const double a = static_cast<double>(state.range(0));
    double b = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fas::marcum_q1(a, b));
        b = b > 12.0 ? 0.1 : b + 0.29;
    }
}
BENCHMARK(BM_MarcumScalar)->Arg(1)->Arg(5)->Arg(20);

void BM_MarcumFixedA(benchmark::State& state)
{
    std::vector<double> b(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < b.size(); ++i)
        b[i] = 8.0 * static_cast<double>(i) / static_cast<double>(b.size());
    std::vector<double> out(b.size());
    double a = 0.5;
    for (auto _ : state) {
        const fas::MarcumFixedA m(a);
        m.one_minus_q1(b, out);
        benchmark::DoNotOptimize(out.data());
        a = a > 6.0 ? 0.5 : a + 0.13;
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MarcumFixedA)->Arg(100)->Arg(512);

void BM_MarcumFixedB(benchmark::State& state)
{
    std::vector<double> a(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = 8.0 * static_cast<double>(i) / static_cast<double>(a.size());
    std::vector<double> out(a.size());
    double b = 0.5;
    for (auto _ : state) {
        const fas::MarcumFixedB m(b);
        m.one_minus_q1(a, out);
        benchmark::DoNotOptimize(out.data());
        b = b > 6.0 ? 0.5 : b + 0.13;
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MarcumFixedB)->Arg(96)->Arg(512);

}  // namespace
