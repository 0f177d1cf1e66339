// Serial reference kernels against their OpenMP counterparts, plus the
// Monte-Carlo sweep run serially and in parallel.

#include "pks/harness.hpp"
#include "pks/kernels.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

std::vector<double> bump(std::size_t n) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n) - 0.5;
        u[i] = std::exp(-40.0 * x * x);
    }
    return u;
}

template <auto Kernel>
void BM_Upwind(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto u = bump(n);
    std::vector<double> du(n);
    for (auto _ : state) {
        Kernel(u, 0.3, 1e-3, du);
        benchmark::DoNotOptimize(du.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Upwind<pks::kernels::upwind_serial>)->Name("upwind/serial")->Range(1 << 10, 1 << 20);
BENCHMARK(BM_Upwind<pks::kernels::upwind>)->Name("upwind/omp")->Range(1 << 10, 1 << 20);

template <auto Kernel>
void BM_ColumnSum(benchmark::State& state) {
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Random(1, state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(Kernel(Q));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ColumnSum<pks::kernels::column_sum_serial>)
    ->Name("column_sum/serial")
    ->Range(1 << 10, 1 << 20);
BENCHMARK(BM_ColumnSum<pks::kernels::column_sum>)->Name("column_sum/omp")->Range(1 << 10, 1 << 20);

template <auto Kernel>
void BM_OffsetDeviation(benchmark::State& state) {
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Random(1, state.range(0));
    const Eigen::MatrixXd Q0 = Eigen::MatrixXd::Random(1, state.range(0));
    const Eigen::VectorXd offset = Eigen::VectorXd::Constant(1, 0.25);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Kernel(Q, Q0, offset));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OffsetDeviation<pks::kernels::max_offset_deviation_serial>)
    ->Name("offset_deviation/serial")
    ->Range(1 << 10, 1 << 20);
BENCHMARK(BM_OffsetDeviation<pks::kernels::max_offset_deviation>)
    ->Name("offset_deviation/omp")
    ->Range(1 << 10, 1 << 20);

pks::Scenario short_scenario() {
    pks::Scenario sc;
    sc.t_end = 10.0;
    sc.solver.n_out = 101;
    return sc;
}

void BM_McSerial(benchmark::State& state) {
    const auto sc = short_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(pks::run_mc_study_serial(sc, {16, 64}, 8, 1));
    }
}
BENCHMARK(BM_McSerial)->Name("mc_study/serial")->Unit(benchmark::kMillisecond);

void BM_McParallel(benchmark::State& state) {
    const auto sc = short_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(pks::run_mc_study(sc, {16, 64}, 8, 1));
    }
}
BENCHMARK(BM_McParallel)->Name("mc_study/omp")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
