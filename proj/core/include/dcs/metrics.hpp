#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dcs/power.hpp"
#include "dcs/scheduler.hpp"

namespace dcs {

/// Fraction of steps with |g(k) − g_s(k)| ≤ γ.
[[nodiscard]] double tracking_ratio(std::span<const double> grid, std::span<const double> scheduled, double gamma);

/// l′(k) = l(k) + Σ (e_req − e_v(a_v)) / ((d_v − a_v)δ) over the vehicles
/// connected at k, each carrying its realized arrival SOC.
[[nodiscard]] double baseline_prosumption(double l, int k, std::span<const StorageDevice> vehicles,
                                          double step_hours);

/// Σ |g(k) − g_s(k)| δ.
[[nodiscard]] double balancing_energy(std::span<const double> grid, std::span<const double> scheduled,
                                      double step_hours);

/// Imbalances billed at twice the schedule tariff, both directions as import.
[[nodiscard]] double imbalance_cost(std::span<const double> grid, std::span<const double> scheduled,
                                    const CostModel& cm);

/// max_k |x(k) − x(k−1)|, zero for fewer than two samples.
[[nodiscard]] double max_step_change(std::span<const double> x);

struct DayMetrics {
    int week_start_doy = 0;
    int day = 0;
    double reliability = 0.0;  // 1 − ε
    bool valid = true;
    double tracking = 0.0;          // R^γ
    double balancing_energy = 0.0;  // kWh
    double schedule_cost = 0.0;     // €
    double imbalance_cost = 0.0;    // €
    double max_ramp_baseline = 0.0;  // kW
    double max_ramp_grid = 0.0;      // kW
    double total_slack = 0.0;
    double solve_seconds = 0.0;
    double energy_audit_error = 0.0;  // kWh
    std::vector<double> terminal_margin;  // e_v(d_v) − e_req per vehicle
};

/// Means over the valid days of one reliability level.
struct LevelSummary {
    double reliability = 0.0;
    int days = 0;
    int invalid_days = 0;
    double tracking = 0.0;
    double balancing_energy = 0.0;
    double schedule_cost = 0.0;
    double imbalance_cost = 0.0;
    double total_cost = 0.0;
    double ramp_baseline = 0.0;
    double ramp_grid = 0.0;
    double solve_seconds = 0.0;
    double min_terminal_margin = 0.0;
    int departures = 0;
    int missed_departures = 0;
    double max_energy_audit_error = 0.0;
};

struct MetricsReport {
    std::vector<DayMetrics> days;
    std::vector<LevelSummary> levels;  // ascending reliability
};

/// A departure counts as missed below e_req − `tolerance`.
[[nodiscard]] MetricsReport summarize(std::vector<DayMetrics> days, double tolerance = 1e-6);

/// Per-day rows, then per-level rows, each table with its own header.
void write_day_metrics(std::ostream& os, std::span<const DayMetrics> days);
void write_level_summary(std::ostream& os, std::span<const LevelSummary> levels);

}  // namespace dcs
