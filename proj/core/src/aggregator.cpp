#include "dcs/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcs {

FleetCalendar::FleetCalendar(std::vector<StorageDevice> pevs) : pevs_(std::move(pevs)) {
    for (const auto& v : pevs_) {
        if (v.kind != DeviceKind::Pev) throw std::invalid_argument("fleet calendar accepts vehicles only");
        if (v.arrival >= v.departure) throw std::invalid_argument("vehicle '" + v.id + "' departs before it arrives");
    }
}

namespace {

template <typename Pred>
std::vector<std::size_t> select(std::span<const StorageDevice> pevs, Pred pred) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pevs.size(); ++i) {
        if (pred(pevs[i])) out.push_back(i);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> FleetCalendar::connected(int k) const {
    return select(pevs_, [k](const StorageDevice& v) { return v.arrival <= k && k < v.departure; });
}

std::vector<std::size_t> FleetCalendar::arrived(int k) const {
    auto out = select(pevs_, [k](const StorageDevice& v) { return v.arrival <= k; });
    std::stable_sort(out.begin(), out.end(),
                     [this](std::size_t a, std::size_t b) { return pevs_[a].arrival < pevs_[b].arrival; });
    return out;
}

std::vector<std::size_t> FleetCalendar::departed(int k) const {
    return select(pevs_, [k](const StorageDevice& v) { return v.departure <= k; });
}

std::vector<std::size_t> FleetCalendar::arriving_at(int k) const {
    return select(pevs_, [k](const StorageDevice& v) { return v.arrival == k; });
}

std::vector<std::size_t> FleetCalendar::departing_at(int k) const {
    return select(pevs_, [k](const StorageDevice& v) { return v.departure == k; });
}

int FleetCalendar::last_departure() const noexcept {
    int last = -1;
    for (const auto& v : pevs_) last = std::max(last, v.departure);
    return last;
}

std::pair<double, double> aggregate_power_limits(int k, const FleetCalendar& cal, const StorageDevice& ess) {
    double lo = ess.p_min;
    double hi = ess.p_max;
    for (std::size_t i : cal.connected(k)) {
        lo += cal.vehicles()[i].p_min;
        hi += cal.vehicles()[i].p_max;
    }
    return {lo, hi};
}

std::vector<std::pair<double, double>> aggregate_energy_limits(const FleetCalendar& cal, const StorageDevice& ess,
                                                               int begin, int steps, DepartureBound rule) {
    const auto pevs = cal.vehicles();
    auto departure_increment = [rule](const StorageDevice& v) {
        return rule == DepartureBound::NetOfArrivalFloor ? v.required_soc - v.e_min : v.required_soc;
    };

    // Seed at the window start from every vehicle already arrived/departed.
    double lo = ess.e_min;
    double hi = ess.e_max;
    for (std::size_t i : cal.arrived(begin)) {
        lo += pevs[i].e_min;
        hi += pevs[i].e_max;
    }
    for (std::size_t i : cal.departed(begin)) lo += departure_increment(pevs[i]);

    std::vector<std::pair<double, double>> limits;
    limits.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = begin; k <= begin + steps; ++k) {
        if (k > begin) {
            // Arrivals first, then departures at the same point.
            for (std::size_t i : cal.arriving_at(k)) {
                lo += pevs[i].e_min;
                hi += pevs[i].e_max;
            }
            for (std::size_t i : cal.departing_at(k)) lo += departure_increment(pevs[i]);
        }
        if (lo > hi + kLimitTolerance) {
            throw IllPosedScenario(k, "aggregate energy lower limit exceeds upper limit at step " + std::to_string(k));
        }
        limits.emplace_back(lo, hi);
    }
    return limits;
}

double step_aggregate_soc(double e, const PowerFlow& p, std::span<const double> arrivals,
                          const EfficiencyVector& mu, double dt) noexcept {
    return e + std::accumulate(arrivals.begin(), arrivals.end(), 0.0) + mu.apply(p) * dt;
}

TimeVaryingBattery build_time_varying_battery(const FleetCalendar& cal, const StorageDevice& ess, int begin,
                                              int steps, std::span<const double> expected_arrival_soc,
                                              DepartureBound rule) {
    if (expected_arrival_soc.size() != cal.size()) {
        throw std::invalid_argument("expected arrival SOC must be given for every vehicle");
    }
    for (const auto& v : cal.vehicles()) {
        if (std::abs(v.loss - ess.loss) > 1e-12) {
            throw std::invalid_argument("vehicle '" + v.id + "' loss differs from the ESS loss");
        }
    }
    TimeVaryingBattery tvb;
    tvb.begin = begin;
    tvb.steps = steps;
    tvb.loss = ess.loss;
    for (int k = begin; k < begin + steps; ++k) {
        const auto [lo, hi] = aggregate_power_limits(k, cal, ess);
        tvb.p_min.push_back(lo);
        tvb.p_max.push_back(hi);
    }
    for (const auto& [lo, hi] : aggregate_energy_limits(cal, ess, begin, steps, rule)) {
        tvb.e_min.push_back(lo);
        tvb.e_max.push_back(hi);
    }
    tvb.arrival_energy.assign(static_cast<std::size_t>(steps) + 1, 0.0);
    for (int k = begin + 1; k <= begin + steps; ++k) {
        for (std::size_t i : cal.arriving_at(k)) {
            tvb.arrival_energy[static_cast<std::size_t>(k - begin)] += expected_arrival_soc[i];
        }
    }
    const auto pevs = cal.vehicles();
    double headroom = 0.0;
    for (std::size_t i : cal.departed(begin)) headroom += pevs[i].e_max - pevs[i].required_soc;
    for (int k = begin; k <= begin + steps; ++k) {
        const auto u = static_cast<std::size_t>(k - begin);
        double lo = tvb.e_min[u];
        double hi = tvb.e_max[u];
        if (k > begin) {
            for (std::size_t i : cal.departing_at(k)) headroom += pevs[i].e_max - pevs[i].required_soc;
            for (std::size_t i : cal.arriving_at(k)) {
                lo -= pevs[i].e_min;
                hi -= pevs[i].e_max;
            }
        }
        tvb.pre_min.push_back(lo);
        tvb.pre_max.push_back(std::max(hi - headroom, lo));
    }
    return tvb;
}

}  // namespace dcs
