#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcs/metrics.hpp"
#include "dcs/operation.hpp"
#include "dcs/pv_model.hpp"
#include "dcs/scenario.hpp"
#include "dcs/scheduler.hpp"

namespace dcs {

/// Vehicles of day `day` (absolute steps) carrying their realized arrival SOC.
[[nodiscard]] std::vector<StorageDevice> day_fleet(const Scenario& s, int day, std::span<const double> arrival_soc);

/// Stage-1 input for day `day`, issued lead steps before its first step.
/// With `s.simulation.deterministic` the scheduler sees the realized
/// arrival SOCs as point masses.
[[nodiscard]] ScheduleProblem make_schedule_problem(const Scenario& s, ProsumptionSource& source, int day,
                                                    std::vector<StorageDevice> fleet, double initial_soc,
                                                    const PowerFlow& previous_grid, double reliability);

/// Schedule used when stage 1 fails: forecast prosumption plus each
/// vehicle's request spread evenly over its stay.
[[nodiscard]] DispatchSchedule fallback_schedule(const ScheduleProblem& prob);

struct DayRun {
    DayMetrics metrics;
    ScheduleProblem problem;
    DispatchSchedule schedule;
    std::string failure;  // empty when stage 1 succeeded
};

struct WeekRun {
    int start_doy = 0;
    double reliability = 0.0;
    std::vector<DayRun> days;
    std::vector<OperationRecord> log;
    std::shared_ptr<ProsumptionSource> source;
};

/// Closed loop over one week: stage 1 at each decision step, stage 2 and
/// stage 3 every step. Traces and arrival SOCs depend only on `seed` and
/// `start_doy`, so all reliability levels see the same realizations.
[[nodiscard]] WeekRun run_week(const Scenario& s, int start_doy, double reliability, std::uint64_t seed);

using Progress = std::function<void(const WeekRun&)>;

/// Every week of the scenario at every level in `reliability`.
[[nodiscard]] std::vector<WeekRun> run_matrix(const Scenario& s, std::span<const double> reliability,
                                              std::uint64_t seed, const Progress& progress = {});

[[nodiscard]] MetricsReport report(std::span<const WeekRun> runs);

/// Sampled P[e̲ ≤ ê − ΔE ≤ ē] at SOC points 1..n of one schedule.
struct ChanceAudit {
    int begin = 0;
    double reliability = 0.0;
    std::vector<double> probability;
    /// Same with ΔE_l drawn from fresh generator paths; empty when the
    /// source cannot draw them.
    std::vector<double> generator;
    [[nodiscard]] double worst() const;
};

/// Randomized Halton draws: ΔE_l from the scheduled bundle and arrival SOCs
/// from each vehicle's arrival distribution. With a `source` the generator
/// coverage is filled in as well.
[[nodiscard]] ChanceAudit audit_chance_constraints(const ScheduleProblem& prob, const DispatchSchedule& dis,
                                                   int draws, std::uint64_t seed,
                                                   ProsumptionSource* source = nullptr);

}  // namespace dcs
