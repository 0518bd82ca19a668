#include "dcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "dcs/text_io.hpp"

namespace dcs {

namespace {

void check_aligned(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("series must be aligned");
}

}  // namespace

double tracking_ratio(std::span<const double> grid, std::span<const double> scheduled, double gamma) {
    check_aligned(grid, scheduled);
    if (grid.empty()) throw std::invalid_argument("tracking ratio needs at least one step");
    std::size_t hit = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (std::abs(grid[k] - scheduled[k]) <= gamma) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(grid.size());
}

double baseline_prosumption(double l, int k, std::span<const StorageDevice> vehicles, double step_hours) {
    double out = l;
    for (const auto& v : vehicles) {
        if (!v.connected(k)) continue;
        const double arrival = v.arrival_soc.value_or(v.soc);
        out += (v.required_soc - arrival) / (static_cast<double>(v.departure - v.arrival) * step_hours);
    }
    return out;
}

double balancing_energy(std::span<const double> grid, std::span<const double> scheduled, double step_hours) {
    check_aligned(grid, scheduled);
    double e = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) e += std::abs(grid[k] - scheduled[k]) * step_hours;
    return e;
}

double imbalance_cost(std::span<const double> grid, std::span<const double> scheduled, const CostModel& cm) {
    check_aligned(grid, scheduled);
    double cost = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::Vector2d d(std::abs(grid[k] - scheduled[k]), 0.0);
        cost += 2.0 * (d.dot(cm.C(k) * d) + cm.c(k).dot(d));
    }
    return cost;
}

double max_step_change(std::span<const double> x) {
    double m = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) m = std::max(m, std::abs(x[k] - x[k - 1]));
    return m;
}

MetricsReport summarize(std::vector<DayMetrics> days, double tolerance) {
    MetricsReport r;
    std::map<double, LevelSummary> by_level;
    for (const auto& d : days) {
        auto& s = by_level[d.reliability];
        s.reliability = d.reliability;
        for (double m : d.terminal_margin) {
            ++s.departures;
            if (m < -tolerance) ++s.missed_departures;
        }
        s.max_energy_audit_error = std::max(s.max_energy_audit_error, d.energy_audit_error);
        if (!d.valid) {
            ++s.invalid_days;
            continue;
        }
        if (s.days == 0) s.min_terminal_margin = std::numeric_limits<double>::infinity();
        ++s.days;
        s.tracking += d.tracking;
        s.balancing_energy += d.balancing_energy;
        s.schedule_cost += d.schedule_cost;
        s.imbalance_cost += d.imbalance_cost;
        s.ramp_baseline += d.max_ramp_baseline;
        s.ramp_grid += d.max_ramp_grid;
        s.solve_seconds += d.solve_seconds;
        for (double m : d.terminal_margin) s.min_terminal_margin = std::min(s.min_terminal_margin, m);
    }
    for (auto& [level, s] : by_level) {
        if (s.days > 0) {
            const double n = s.days;
            s.tracking /= n;
            s.balancing_energy /= n;
            s.schedule_cost /= n;
            s.imbalance_cost /= n;
            s.ramp_baseline /= n;
            s.ramp_grid /= n;
            s.solve_seconds /= n;
        }
        s.total_cost = s.schedule_cost + s.imbalance_cost;
        r.levels.push_back(s);
    }
    r.days = std::move(days);
    return r;
}

void write_day_metrics(std::ostream& os, std::span<const DayMetrics> days) {
    using text::exact;
    text::write_row(os, {"week_start_doy", "day", "reliability", "valid", "tracking", "balancing_kwh", "schedule_cost",
                         "imbalance_cost", "ramp_baseline_kw", "ramp_grid_kw", "total_slack", "solve_s",
                         "audit_error_kwh", "min_terminal_margin_kwh"});
    for (const auto& d : days) {
        const double margin = d.terminal_margin.empty()
                                  ? 0.0
                                  : *std::min_element(d.terminal_margin.begin(), d.terminal_margin.end());
        text::write_row(os, {std::to_string(d.week_start_doy), std::to_string(d.day), exact(d.reliability),
                             d.valid ? "1" : "0", exact(d.tracking), exact(d.balancing_energy),
                             exact(d.schedule_cost), exact(d.imbalance_cost), exact(d.max_ramp_baseline),
                             exact(d.max_ramp_grid), exact(d.total_slack), exact(d.solve_seconds),
                             exact(d.energy_audit_error), exact(margin)});
    }
}

void write_level_summary(std::ostream& os, std::span<const LevelSummary> levels) {
    using text::exact;
    text::write_row(os, {"reliability", "days", "invalid_days", "tracking", "balancing_kwh", "schedule_cost",
                         "imbalance_cost", "total_cost", "ramp_baseline_kw", "ramp_grid_kw", "solve_s",
                         "departures", "missed_departures", "min_terminal_margin_kwh", "max_audit_error_kwh"});
    for (const auto& s : levels) {
        text::write_row(os, {exact(s.reliability), std::to_string(s.days), std::to_string(s.invalid_days),
                             exact(s.tracking), exact(s.balancing_energy), exact(s.schedule_cost),
                             exact(s.imbalance_cost), exact(s.total_cost), exact(s.ramp_baseline),
                             exact(s.ramp_grid), exact(s.solve_seconds), std::to_string(s.departures),
                             std::to_string(s.missed_departures), exact(s.min_terminal_margin),
                             exact(s.max_energy_audit_error)});
    }
}

}  // namespace dcs
