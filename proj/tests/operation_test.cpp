#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "dcs/operation.hpp"

using namespace dcs;

namespace {

StorageDevice table_ess(double soc = 6.5) { return make_ess(-5.0, 5.0, 0.0, 13.0, 0.05, soc); }

AllocationProblem flat_problem(double g, double l, int horizon = 11) {
    AllocationProblem p;
    p.step = 0;
    p.horizon = horizon;
    p.schedule.assign(static_cast<std::size_t>(horizon) + 1, split(g));
    p.forecast.assign(static_cast<std::size_t>(horizon) + 1, l);
    p.ess = table_ess();
    return p;
}

double balance_gap(const AllocationProblem& p, const AllocationResult& r, std::size_t h) {
    double devices = r.ess_power[h].net();
    for (const auto& v : r.vehicle_power) devices += v[h].net();
    return p.forecast[h] + devices - p.schedule[h].net() - r.sigma[h].net();
}

}  // namespace

TEST(Allocate, NothingToDo) {
    const auto r = allocate(flat_problem(0.0, 0.0));
    ASSERT_EQ(r.sigma.size(), 12u);
    for (std::size_t h = 0; h < r.sigma.size(); ++h) {
        EXPECT_EQ(r.sigma[h], PowerFlow{});
        EXPECT_NEAR(r.ess_power[h].fwd, 0.0, 1e-6);
        EXPECT_NEAR(r.ess_power[h].rev, 0.0, 1e-6);
    }
    EXPECT_NEAR(r.ess_soc.back(), 6.5, 1e-6);
}

TEST(Allocate, SingleVehicleReachesItsRequest) {
    auto p = flat_problem(0.0, 0.0);
    // 30 kWh in 10 steps; the schedule imports exactly the lossy energy.
    for (int h = 1; h <= 10; ++h) p.schedule[static_cast<std::size_t>(h)] = split(30.0 / 0.95 / 10.0);
    auto v = make_pev("v", 0.0, 10.0, 0.0, 40.0, 0.05, 1, 11, 30.0);
    v.soc = 0.0;
    p.vehicles.push_back(v);
    const auto r = allocate(p);
    EXPECT_NEAR(r.vehicle_soc[0][11], 30.0, 1e-5);
    EXPECT_NEAR(r.shortfall[0], 0.0, 1e-6);
    for (std::size_t h = 0; h < r.sigma.size(); ++h) {
        EXPECT_EQ(r.sigma[h], PowerFlow{}) << "step " << h;
        EXPECT_GE(r.vehicle_power[0][h].net(), -1e-9);
    }
}

TEST(Allocate, SlackAbsorbsAnUnreachableExport) {
    const auto p = flat_problem(-100.0, 0.0, 3);
    const auto r = allocate(p);
    for (std::size_t h = 0; h < r.sigma.size(); ++h) {
        EXPECT_GT(r.sigma[h].net(), 90.0);
        EXPECT_NEAR(balance_gap(p, r, h), 0.0, 1e-6);
    }
}

TEST(Allocate, BalanceHoldsAndVehiclesNeverDischarge) {
    auto p = flat_problem(2.0, -1.0);
    for (std::size_t h = 0; h < p.forecast.size(); ++h) p.forecast[h] = -3.0 + 0.5 * static_cast<double>(h);
    auto a = make_pev("a", 0.0, 10.0, 7.0, 40.0, 0.05, 0, 6, 30.0);
    a.soc = 12.0;
    auto b = make_pev("b", 0.0, 10.0, 7.0, 40.0, 0.05, 3, 10, 30.0);
    b.soc = 20.0;
    p.vehicles = {a, b};
    const auto r = allocate(p);
    for (std::size_t h = 0; h < r.sigma.size(); ++h) {
        EXPECT_NEAR(balance_gap(p, r, h), 0.0, 1e-6);
        for (const auto& v : r.vehicle_power) EXPECT_GE(v[h].net(), -1e-9);
        EXPECT_LE(std::min(r.ess_power[h].fwd, -r.ess_power[h].rev), 1e-7);
    }
    // Vehicle b is absent before its arrival step k = 3, horizon index 2.
    for (std::size_t h = 0; h < 2; ++h) EXPECT_EQ(r.vehicle_power[1][h], PowerFlow{});
}

TEST(Allocate, IdempotentObjective) {
    auto p = flat_problem(1.0, -2.0);
    auto v = make_pev("v", 0.0, 10.0, 7.0, 40.0, 0.05, 0, 8, 30.0);
    v.soc = 15.0;
    p.vehicles.push_back(v);
    const auto a = allocate(p);
    const auto b = allocate(p);
    EXPECT_NEAR(a.objective, b.objective, 1e-8);
}

TEST(Allocate, HandoffTargetPullsTheStorage) {
    auto p = flat_problem(0.0, 0.0);
    p.handoff_point = p.first() + 6;
    p.handoff_soc = 10.0;
    const auto r = allocate(p);
    EXPECT_NEAR(r.ess_soc_at(p.handoff_point, p.first()), 6.5, 1e-6);

    // Pulled only while a schedule surplus makes the move free of σ.
    for (int h = 0; h < 6; ++h) p.schedule[static_cast<std::size_t>(h)] = split(1.0);
    const auto pulled = allocate(p);
    EXPECT_NEAR(pulled.ess_soc_at(p.handoff_point, p.first()), 6.5 + 6 * 0.95, 1e-5);
    for (const auto& s : pulled.sigma) EXPECT_EQ(s, PowerFlow{});
}

TEST(Allocate, RejectsMalformedProblems) {
    auto p = flat_problem(0.0, 0.0);
    p.forecast.pop_back();
    EXPECT_THROW((void)allocate(p), std::invalid_argument);
    p = flat_problem(0.0, 0.0);
    p.overcharge = {1.0};
    EXPECT_THROW((void)allocate(p), std::invalid_argument);
}

TEST(OverchargeWeights, EarlyLeaversWeighMore) {
    std::vector<StorageDevice> fleet{make_pev("a", 0, 10, 7, 40, 0.05, 0, 10, 30),
                                     make_pev("b", 0, 10, 7, 40, 0.05, 0, 5, 30),
                                     make_pev("c", 0, 10, 7, 40, 0.05, 0, 10, 30)};
    const auto w = default_overcharge_weights(fleet, 10.0);
    EXPECT_DOUBLE_EQ(w[0], 10.0);
    EXPECT_DOUBLE_EQ(w[1], 12.0);
    EXPECT_DOUBLE_EQ(w[2], 10.0);
}

TEST(ReferencePower, Examples) {
    EXPECT_DOUBLE_EQ(reference_power({3.0, 0.0}, {}), 3.0);
    EXPECT_DOUBLE_EQ(reference_power({3.0, 0.0}, {0.0, -1.0}), 2.0);
    EXPECT_DOUBLE_EQ(reference_power({}, {}), 0.0);
}

TEST(BalanceRealtime, PerfectForecast) {
    const std::vector<PowerFlow> pev{{4.0, 0.0}};
    // Plan: l = −1, PEV 4, ESS 2 → g = 5.
    const auto out = balance_realtime(5.0, -1.0, pev, table_ess(), 1.0);
    EXPECT_NEAR(out.ess_power.net(), 2.0, 1e-12);
    EXPECT_NEAR(out.residual, 0.0, 1e-12);
    EXPECT_FALSE(out.clipped());
}

TEST(BalanceRealtime, ErrorWithinHeadroom) {
    const std::vector<PowerFlow> pev{{4.0, 0.0}};
    const auto out = balance_realtime(5.0, 1.0, pev, table_ess(), 1.0);
    EXPECT_NEAR(out.ess_power.net(), 0.0, 1e-12);
    EXPECT_NEAR(out.residual, 0.0, 1e-12);
    EXPECT_NEAR(out.ess_soc, 6.5, 1e-12);
}

TEST(BalanceRealtime, ClippedAtPowerLimit) {
    const auto out = balance_realtime(0.0, 8.0, {}, table_ess(), 1.0);
    EXPECT_DOUBLE_EQ(out.desired, -8.0);
    EXPECT_NEAR(out.ess_power.net(), -5.0, 1e-12);
    EXPECT_NEAR(out.grid.net(), 3.0, 1e-12);
    EXPECT_NEAR(out.residual, -3.0, 1e-12);
    EXPECT_TRUE(out.clipped());
}

TEST(BalanceRealtime, ClippedAtEnergyLimit) {
    // The SOC may end inside the limit tolerance band above e_max.
    const auto out = balance_realtime(0.0, -5.0, {}, table_ess(12.05), 1.0);
    EXPECT_NEAR(out.ess_power.net(), 1.0, 1e-8);
    EXPECT_NEAR(out.ess_soc, 13.0, 1e-8);
    EXPECT_LE(out.ess_soc, 13.0 + kLimitTolerance);
    EXPECT_NEAR(out.residual, 4.0, 1e-8);
}

TEST(BalanceRealtime, RealizedBalanceIsExact) {
    const std::vector<PowerFlow> pev{{3.3, 0.0}, {7.1, 0.0}};
    for (double l : {-20.0, -4.0, 0.0, 2.5, 30.0}) {
        const auto out = balance_realtime(1.5, l, pev, table_ess(), 1.0);
        EXPECT_NEAR(out.grid.net(), l + 3.3 + 7.1 + out.ess_power.net(), 1e-12);
        EXPECT_NEAR(out.residual, 1.5 - out.grid.net(), 1e-12);
        EXPECT_GE(out.ess_soc, 0.0);
        EXPECT_LE(out.ess_soc, 13.0);
    }
}

TEST(OperationLog, RoundTripsTheMetricSeries) {
    OperationRecord r;
    r.step = 12;
    r.scheduled = {2.0, 0.0};
    r.p_ref = 2.0;
    r.prosumption = -1.25;
    r.baseline = 0.75;
    r.grid = {1.0 / 3.0, 0.0};
    r.residual = 2.0 - 1.0 / 3.0;
    r.vehicle_ids = {"v1"};
    r.vehicle_power = {{2.0, 0.0}};
    r.vehicle_soc = {20.0};
    std::vector<OperationRecord> recs{r};
    r.step = 13;
    recs.push_back(r);
    std::stringstream ss;
    write_operation_log(ss, recs);
    const auto back = read_operation_log(ss);
    ASSERT_EQ(back.step.size(), 2u);
    EXPECT_EQ(back.step[1], 13);
    EXPECT_EQ(back.grid[0], 1.0 / 3.0);
    EXPECT_EQ(back.residual[0], 2.0 - 1.0 / 3.0);
    EXPECT_EQ(back.baseline[1], 0.75);
}
