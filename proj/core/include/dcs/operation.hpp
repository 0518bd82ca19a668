#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dcs/power.hpp"

namespace dcs {

/// Receding-horizon allocation solved at step k over power steps
/// first()..first()+steps()-1, with first() = k + 1.
struct AllocationProblem {
    int step = 0;          // k
    int horizon = 11;      // M
    double step_hours = 1.0;
    /// Committed exchange and point forecast for each horizon step.
    std::vector<PowerFlow> schedule;
    std::vector<double> forecast;
    /// Expected ESS state at SOC point first().
    StorageDevice ess;
    /// Vehicles that are or will be connected in the horizon. The SOC of a
    /// vehicle with arrival <= first() is its measured SOC; for later
    /// arrivals it is the expected arrival SOC.
    std::vector<StorageDevice> vehicles;
    /// c^d per vehicle; empty selects default_overcharge_weights.
    std::vector<double> overcharge;
    double alpha_sigma = 1e3;
    double shortfall_weight = 1e5;
    /// ESS SOC a later stage-1 solve assumed at SOC point handoff_point;
    /// deviations cost handoff_weight per kWh. Ignored outside the horizon.
    int handoff_point = -1;
    double handoff_soc = 0.0;
    double handoff_weight = 1e2;

    [[nodiscard]] int first() const noexcept { return step + 1; }
    [[nodiscard]] int steps() const noexcept { return horizon + 1; }
    void validate() const;
};

/// Base weight scaled by 1 + 0.1 per vehicle departing strictly later, so
/// that early leavers carry the larger overcharge penalty.
[[nodiscard]] std::vector<double> default_overcharge_weights(std::span<const StorageDevice> vehicles,
                                                             double base);

struct AllocationResult {
    std::vector<PowerFlow> ess_power;                  // per horizon step
    std::vector<double> ess_soc;                       // steps() + 1 points
    std::vector<std::vector<PowerFlow>> vehicle_power;  // [vehicle][step]
    std::vector<std::vector<double>> vehicle_soc;       // [vehicle][point]
    std::vector<PowerFlow> sigma;
    /// Unmet charging request per vehicle: at departure for vehicles leaving
    /// in the horizon, otherwise what full power cannot recover afterwards.
    std::vector<double> shortfall;
    double objective = 0.0;
    int iterations = 0;

    [[nodiscard]] double ess_soc_at(int k, int first) const { return ess_soc.at(static_cast<std::size_t>(k - first)); }
};

/// Throws std::runtime_error when the QP does not converge.
[[nodiscard]] AllocationResult allocate(const AllocationProblem& prob);

[[nodiscard]] inline double reference_power(const PowerFlow& scheduled, const PowerFlow& sigma) noexcept {
    return scheduled.net() + sigma.net();
}

struct BalancingOutcome {
    PowerFlow ess_power;
    PowerFlow grid;
    double ess_soc = 0.0;   // after the step
    double desired = 0.0;   // ESS power before clipping
    double residual = 0.0;  // p_ref − net(g)
    [[nodiscard]] bool clipped() const noexcept { return ess_power.net() != desired; }
};

/// Lets the ESS absorb the realized imbalance, clipped to its power limits
/// and to the power its SOC limits allow over one step.
[[nodiscard]] BalancingOutcome balance_realtime(double p_ref, double l_realized,
                                                std::span<const PowerFlow> pev_powers,
                                                const StorageDevice& ess, double step_hours);

/// One simulated step: stage-3 inputs and outcome plus device states.
struct OperationRecord {
    int step = 0;
    PowerFlow scheduled;
    PowerFlow sigma;
    double p_ref = 0.0;
    double prosumption = 0.0;
    double baseline = 0.0;
    PowerFlow grid;
    double residual = 0.0;
    PowerFlow ess_power;
    double ess_soc = 0.0;  // after the step
    std::vector<std::string> vehicle_ids;
    std::vector<PowerFlow> vehicle_power;
    std::vector<double> vehicle_soc;  // after the step
};

/// Long format "step,series,value". Series: g_s, sigma, p_ref, l, l_baseline,
/// g, residual, p_ess, e_ess, then p_<id> and e_<id> per connected vehicle.
void write_operation_log(std::ostream& os, std::span<const OperationRecord> records);

/// Per-step series needed for the metrics, read back from a log.
struct OperationSeries {
    std::vector<int> step;
    std::vector<double> scheduled, grid, prosumption, baseline, residual;
};
[[nodiscard]] OperationSeries read_operation_log(std::istream& is);

}  // namespace dcs
