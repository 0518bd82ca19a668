#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dcs/aggregator.hpp"
#include "dcs/distribution.hpp"
#include "dcs/power.hpp"
#include "dcs/scheduler.hpp"

namespace dcs {

/// Relative frequency of the PEV SOC on arrival, one entry per bin value.
struct ArrivalHistogram {
    std::vector<double> soc;        // kWh, strictly increasing
    std::vector<double> frequency;  // nonnegative, normalized on validate()

    void validate() const;
    /// Throws std::invalid_argument when a bin lies outside [e_min, e_max].
    void check_support(double e_min, double e_max) const;
    [[nodiscard]] double mean() const;
    [[nodiscard]] EmpiricalDistribution distribution(double step = kDefaultGridStep) const;
};

/// Commute-based histogram: one-way distance D ~ lognormal(log(median_km),
/// sigma), round trip 2D consumed at capacity/autonomy kWh per km from a
/// full request, clipped at the vehicle floor and binned at `bin_kwh`.
struct CommuteModel {
    double median_km = 18.0;
    double sigma = 0.55;
    double autonomy_km = 280.0;
    double bin_kwh = 2.0;
};
[[nodiscard]] ArrivalHistogram commute_histogram(const CommuteModel& m, double capacity_kwh, double required_kwh,
                                                 double floor_kwh);

[[nodiscard]] double sample_arrival_soc(const ArrivalHistogram& hist, std::mt19937_64& rng);
[[nodiscard]] double sample_arrival_soc(const ArrivalHistogram& hist, std::uint64_t seed);

/// Columns soc_bin_kWh, relative_frequency.
[[nodiscard]] ArrivalHistogram read_histogram(const std::string& path);
void write_histogram(const std::string& path, const ArrivalHistogram& hist);

struct FleetSlot {
    std::string id;
    int arrival_hour = 0;    // relative to the start of the day
    int departure_hour = 0;
};

struct PvSettings {
    double capacity_kw = 10.0;
    double day_to_day_correlation = 0.6;
    double hourly_correlation = 0.75;
    double spread_base = 0.08;
    double spread_peak = 0.22;
};

struct ForecastSettings {
    /// "synthetic" or "files".
    std::string source = "synthetic";
    std::string trace_path;     // step,l_kw
    std::string quantile_path;  // issue_step,step,tau,value
    std::vector<double> levels{0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.975, 0.99};
    double coverage = kDefaultCoverage;
    double grid_step = kDefaultGridStep;
    int ensemble_size = 300;
};

struct SimulationSettings {
    std::vector<int> week_start_doy{288, 319, 349, 46, 74, 115};
    int days_per_week = 7;
    int horizon = 11;
    std::uint64_t seed = 20131014;
    /// Point-mass forecasts and arrival SOCs known to the scheduler.
    bool deterministic = false;
    double initial_soc_fraction = 0.5;
    DepartureBound departure_rule = DepartureBound::NetOfArrivalFloor;
    double gamma = 1e-4;
};

struct Scenario {
    TimeGrid grid;          // decision_step/begin are relative to each day
    int decision_lead = 12; // k_b − k0
    StorageDevice ess = make_ess(-5.0, 5.0, 0.0, 13.0, 0.05, 6.5);
    StorageDevice pev = make_pev("pev", 0.0, 10.0, 7.0, 40.0, 0.05, 0, 1, 30.0);
    std::vector<FleetSlot> fleet{{"pev1", 7, 17}, {"pev2", 8, 16}, {"pev3", 9, 17}, {"pev4", 9, 17}, {"pev5", 10, 18}};
    CostModel costs;
    ArrivalHistogram arrival_soc;
    std::string histogram_path;
    CommuteModel commute;
    PvSettings pv;
    ForecastSettings forecasts;
    std::vector<double> reliability_levels{0.55, 0.65, 0.75, 0.85};
    double nu = 1e-3;
    SimulationSettings simulation;

    /// Throws std::invalid_argument describing the first inconsistency.
    void validate() const;
};

/// The five-vehicle parking lot with a commute-derived histogram.
[[nodiscard]] Scenario default_scenario();

/// YAML with optional sections grid, ess, pev, fleet, costs, forecasts, pv,
/// arrival_soc, reliability and simulation; omitted keys keep defaults.
/// Relative paths resolve against the file's directory.
[[nodiscard]] Scenario load_scenario(const std::string& path);

}  // namespace dcs
