#include <benchmark/benchmark.h>

#include <random>

#include "dcs/distribution.hpp"
#include "dcs/operation.hpp"
#include "dcs/scenario.hpp"
#include "dcs/scheduler.hpp"
#include "dcs/simulation.hpp"

using namespace dcs;

namespace {

ScheduleProblem parking_lot_day(double reliability) {
    const auto s = default_scenario();
    auto source = make_source(s, 288, s.simulation.days_per_week, s.simulation.seed);
    std::mt19937_64 rng(s.simulation.seed);
    std::vector<double> socs;
    for (std::size_t i = 0; i < s.fleet.size(); ++i) socs.push_back(sample_arrival_soc(s.arrival_soc, rng));
    return make_schedule_problem(s, *source, 1, day_fleet(s, 1, socs), s.ess.soc, {}, reliability);
}

}  // namespace

static void BM_StageOneSolve(benchmark::State& state) {
    const auto p = parking_lot_day(static_cast<double>(state.range(0)) / 100.0);
    const CostModel cm;
    for (auto _ : state) benchmark::DoNotOptimize(solve_dispatch(p, cm));
}
BENCHMARK(BM_StageOneSolve)->Arg(55)->Arg(85)->Unit(benchmark::kMillisecond);

static void BM_StageTwoAllocate(benchmark::State& state) {
    AllocationProblem p;
    p.step = 7;
    p.horizon = 11;
    for (int h = 0; h <= p.horizon; ++h) {
        p.schedule.push_back(split(12.0));
        p.forecast.push_back(-2.0);
    }
    p.ess = make_ess(-5.0, 5.0, 0.0, 13.0, 0.05, 6.5);
    const int window[5][2] = {{7, 17}, {8, 16}, {9, 17}, {9, 17}, {10, 18}};
    for (int i = 0; i < 5; ++i) {
        auto v = make_pev("pev" + std::to_string(i + 1), 0.0, 10.0, 7.0, 40.0, 0.05, window[i][0], window[i][1], 30.0);
        v.soc = 14.0;
        p.vehicles.push_back(v);
    }
    for (auto _ : state) benchmark::DoNotOptimize(allocate(p));
}
BENCHMARK(BM_StageTwoAllocate)->Unit(benchmark::kMillisecond);

static void BM_EnergyDeviation(benchmark::State& state) {
    const auto p = parking_lot_day(0.85);
    const auto arrival = p.arrival_soc.front();
    const std::vector<EmpiricalDistribution> arrivals(static_cast<std::size_t>(state.range(0)), arrival);
    const int j = p.forecast.begin + p.grid.extended_steps();
    for (auto _ : state) benchmark::DoNotOptimize(energy_deviation_distribution(p.forecast, j, arrivals));
}
BENCHMARK(BM_EnergyDeviation)->Arg(0)->Arg(1)->Arg(5)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
