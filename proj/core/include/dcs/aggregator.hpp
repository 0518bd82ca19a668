#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcs/power.hpp"

namespace dcs {

/// Arrival/departure bookkeeping for the vehicles of one scheduling window.
///
/// A vehicle is connected on power steps a_v <= k < d_v. Its SOC belongs to
/// the aggregate from SOC point a_v on, and it counts as departed at SOC
/// points k >= d_v.
class FleetCalendar {
public:
    FleetCalendar() = default;
    explicit FleetCalendar(std::vector<StorageDevice> pevs);

    [[nodiscard]] std::span<const StorageDevice> vehicles() const noexcept { return pevs_; }
    [[nodiscard]] std::size_t size() const noexcept { return pevs_.size(); }

    /// Indices connected during power step k (the ESS is implicit).
    [[nodiscard]] std::vector<std::size_t> connected(int k) const;
    /// Cumulative arrivals A(k), ordered by arrival step then index.
    [[nodiscard]] std::vector<std::size_t> arrived(int k) const;
    /// Cumulative departures D(k).
    [[nodiscard]] std::vector<std::size_t> departed(int k) const;
    [[nodiscard]] std::vector<std::size_t> arriving_at(int k) const;
    [[nodiscard]] std::vector<std::size_t> departing_at(int k) const;
    /// Latest departure step, or -1 when the fleet is empty.
    [[nodiscard]] int last_departure() const noexcept;

private:
    std::vector<StorageDevice> pevs_;
};

/// How a departure raises the aggregate lower energy bound.
enum class DepartureBound {
    /// By e_req - e_min_v: the departed energy floor replaces the floor the
    /// vehicle contributed while connected. Every per-device feasible
    /// trajectory stays inside the aggregate limits.
    NetOfArrivalFloor,
    /// By e_req on top of the arrival floor e_min_v (literal recursion).
    RequiredOnTop,
};

class IllPosedScenario : public std::runtime_error {
public:
    IllPosedScenario(int step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    [[nodiscard]] int step() const noexcept { return step_; }

private:
    int step_;
};

/// The ESS and all vehicles of one window seen as a single storage with
/// time-varying limits. Power limits are indexed by power step, energy
/// limits by SOC point (steps + 1 entries starting at `begin`).
struct TimeVaryingBattery {
    int begin = 0;
    int steps = 0;
    double loss = 0.0;
    std::vector<double> p_min;
    std::vector<double> p_max;
    std::vector<double> e_min;
    std::vector<double> e_max;
    /// Expected energy injected on arrival at each SOC point.
    std::vector<double> arrival_energy;
    /// Limits on e − arrival_energy at each SOC point: the state just before
    /// that point's arrivals, with departed vehicles frozen at e_req.
    std::vector<double> pre_min;
    std::vector<double> pre_max;

    [[nodiscard]] double power_min(int k) const { return p_min.at(static_cast<std::size_t>(k - begin)); }
    [[nodiscard]] double power_max(int k) const { return p_max.at(static_cast<std::size_t>(k - begin)); }
    [[nodiscard]] double energy_min(int k) const { return e_min.at(static_cast<std::size_t>(k - begin)); }
    [[nodiscard]] double energy_max(int k) const { return e_max.at(static_cast<std::size_t>(k - begin)); }
};

[[nodiscard]] std::pair<double, double> aggregate_power_limits(int k, const FleetCalendar& cal,
                                                               const StorageDevice& ess);

/// Energy limits at SOC points begin..begin+steps. Throws IllPosedScenario
/// at the first point where the lower limit exceeds the upper one.
[[nodiscard]] std::vector<std::pair<double, double>> aggregate_energy_limits(
    const FleetCalendar& cal, const StorageDevice& ess, int begin, int steps,
    DepartureBound rule = DepartureBound::NetOfArrivalFloor);

/// e + sum of arrival energies + mu^T p dt.
[[nodiscard]] double step_aggregate_soc(double e, const PowerFlow& p, std::span<const double> arrivals,
                                        const EfficiencyVector& mu, double dt) noexcept;

/// Builds the aggregate over [begin, begin+steps]. `expected_arrival_soc`
/// is indexed like the calendar and feeds the expected arrival jumps.
/// Vehicles must share the ESS loss coefficient.
[[nodiscard]] TimeVaryingBattery build_time_varying_battery(
    const FleetCalendar& cal, const StorageDevice& ess, int begin, int steps,
    std::span<const double> expected_arrival_soc,
    DepartureBound rule = DepartureBound::NetOfArrivalFloor);

}  // namespace dcs
