#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.
// They share no code with the library beyond the device primitives.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dcs/aggregator.hpp"
#include "dcs/distribution.hpp"

namespace dcs::oracle {

inline EmpiricalDistribution random_lattice(std::mt19937_64& rng, double step, int max_points) {
    std::uniform_int_distribution<int> count(1, max_points);
    std::uniform_int_distribution<int> offset(-30, 30);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    const int n = count(rng);
    std::vector<double> pdf(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& p : pdf) total += (p = w(rng));
    for (auto& p : pdf) p /= total;
    return EmpiricalDistribution(step, step * offset(rng), std::move(pdf));
}

/// Every outcome tuple of X = −L + Σ A_i, keyed by lattice index.
inline std::map<long, double> enumerate_deviation(const EmpiricalDistribution& l,
                                                  const std::vector<EmpiricalDistribution>& arrivals) {
    std::map<long, double> out;
    const double step = l.step();
    for (std::size_t i = 0; i < l.size(); ++i) out[std::lround(-l.node(i) / step)] += l.pdf()[i];
    for (const auto& a : arrivals) {
        std::map<long, double> next;
        for (const auto& [x, p] : out) {
            for (std::size_t j = 0; j < a.size(); ++j) next[x + std::lround(a.node(j) / step)] += p * a.pdf()[j];
        }
        out = std::move(next);
    }
    return out;
}

/// Largest |F(x) − F_exact(x)| at the lattice nodes and the cell midpoints
/// between them, over `trials` random instances with 0..3 arrivals.
inline double convolution_worst_error(std::uint64_t seed, int trials) {
    std::mt19937_64 rng(seed);
    const double step = 0.1;
    std::uniform_int_distribution<int> n_arrivals(0, 3);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        ForecastBundle b;
        b.begin = 0;
        b.expected = {0.0, 0.0};
        b.lower = {-5.0, -5.0};
        b.upper = {5.0, 5.0};
        b.energy_error = {EmpiricalDistribution::point_mass(0.0), random_lattice(rng, step, 10),
                          random_lattice(rng, step, 10)};
        std::vector<EmpiricalDistribution> arrivals;
        const int n = n_arrivals(rng);
        for (int i = 0; i < n; ++i) arrivals.push_back(random_lattice(rng, step, 10));
        const auto d = energy_deviation_distribution(b, 2, arrivals);
        const auto exact = enumerate_deviation(b.energy_error[2], arrivals);
        worst = std::max(worst, std::abs(d.cdf_at(static_cast<double>(exact.begin()->first - 1) * step)));
        double cum = 0.0;
        for (const auto& [x, p] : exact) {
            cum += p;
            worst = std::max(worst, std::abs(d.cdf_at(static_cast<double>(x) * step) - cum));
            worst = std::max(worst, std::abs(d.cdf_at((static_cast<double>(x) + 0.5) * step) - cum));
        }
    }
    return worst;
}

/// Worst excursions of one random per-device-feasible dispatch outside the
/// aggregate limits; all zero when the aggregate contains it.
struct AggregationTrial {
    double device = 0.0;     // per-device limit violation (generator sanity)
    double departure = 0.0;  // |e_v(d_v) − e_req|
    double power = 0.0;
    double energy = 0.0;
    double pre_arrival = 0.0;
};

/// ESS plus two PEVs over `steps` hour steps.
inline AggregationTrial aggregation_trial(std::uint64_t seed, int steps = 8) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto ess = make_ess(-3.0, 3.0, 1.0, 10.0, 0.05, 1.0 + 9.0 * u(rng));
    const auto mu = ess.efficiency();
    std::vector<StorageDevice> pevs;
    for (int i = 0; i < 2; ++i) {
        const int a = 1 + static_cast<int>(u(rng) * 4);
        const int d = std::min(steps, a + 2 + static_cast<int>(u(rng) * 4));
        auto v = make_pev("v" + std::to_string(i), 0.0, 6.0, 4.0, 30.0, 0.05, a, d, 0.0);
        v.arrival_soc = 4.0 + 10.0 * u(rng);
        v.required_soc = std::min(v.e_max, *v.arrival_soc + mu.charge * 6.0 * (d - a) * u(rng));
        pevs.push_back(v);
    }
    const FleetCalendar cal(pevs);
    std::vector<double> arrival;
    for (const auto& v : pevs) arrival.push_back(*v.arrival_soc);
    const auto tvb = build_time_varying_battery(cal, ess, 0, steps, arrival);

    AggregationTrial out;
    auto excess = [](double x, double lo, double hi) { return std::max({0.0, x - hi, lo - x}); };
    auto device = [&](const StorageDevice& d, const PowerFlow& p, double e) {
        const auto c = check_limits(d, p, e);
        out.device = std::max({out.device, std::abs(c.power_violation), std::abs(c.energy_violation)});
    };

    double e_ess = ess.soc;
    std::vector<double> e_pev(pevs.size(), 0.0);
    for (int k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < pevs.size(); ++i) {
            if (pevs[i].arrival == k) e_pev[i] = *pevs[i].arrival_soc;
        }
        const double lo = std::max(ess.p_min, (ess.e_min - e_ess) / mu.discharge);
        const double hi = std::min(ess.p_max, (ess.e_max - e_ess) / mu.charge);
        const PowerFlow p_ess = split(lo + (hi - lo) * u(rng));
        e_ess = step_soc(e_ess, p_ess, mu, 1.0);
        device(ess, p_ess, e_ess);
        double sum = p_ess.net();
        for (std::size_t i = 0; i < pevs.size(); ++i) {
            const auto& v = pevs[i];
            if (!v.connected(k)) continue;
            // Random power that keeps the request reachable without
            // overshooting it, so the last step lands exactly on it.
            const int left = v.departure - k - 1;
            const double need = (v.required_soc - e_pev[i]) / mu.charge - v.p_max * left;
            const double p_lo = std::max(0.0, need);
            const double p_hi = std::max(p_lo, std::min(v.p_max, (v.required_soc - e_pev[i]) / mu.charge));
            const double p = p_lo + (p_hi - p_lo) * u(rng);
            e_pev[i] = step_soc(e_pev[i], {p, 0.0}, mu, 1.0);
            device(v, {p, 0.0}, e_pev[i]);
            sum += p;
        }
        const auto [agg_lo, agg_hi] = aggregate_power_limits(k, cal, ess);
        out.power = std::max(out.power, excess(sum, agg_lo, agg_hi));

        const int point = k + 1;
        double e = e_ess;
        for (std::size_t i = 0; i < pevs.size(); ++i) {
            if (pevs[i].arrival == point) e_pev[i] = *pevs[i].arrival_soc;
            if (pevs[i].arrival <= point) e += e_pev[i];
            if (pevs[i].departure == point) {
                out.departure = std::max(out.departure, std::abs(e_pev[i] - pevs[i].required_soc));
            }
        }
        const auto j = static_cast<std::size_t>(point);
        out.energy = std::max(out.energy, excess(e, tvb.e_min[j], tvb.e_max[j]));
        out.pre_arrival = std::max(out.pre_arrival, excess(e - tvb.arrival_energy[j], tvb.pre_min[j], tvb.pre_max[j]));
    }
    return out;
}

}  // namespace dcs::oracle
