#include "dcs/operation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "dcs/qp.hpp"
#include "dcs/text_io.hpp"

namespace dcs {

namespace {

constexpr double kRidge = 1e-6;
constexpr double kThroughput = 1e-4;
constexpr double kSigmaZero = 1e-7;
constexpr double kCycling = 1e-7;

}  // namespace

void AllocationProblem::validate() const {
    if (horizon < 0) throw std::invalid_argument("allocation horizon must be nonnegative");
    if (!(step_hours > 0.0)) throw std::invalid_argument("step duration must be positive");
    const auto n = static_cast<std::size_t>(steps());
    if (schedule.size() != n || forecast.size() != n) {
        throw std::invalid_argument("schedule and forecast must cover every horizon step");
    }
    if (ess.kind != DeviceKind::Ess) throw std::invalid_argument("allocation needs an ESS device");
    for (const auto& v : vehicles) {
        if (v.kind != DeviceKind::Pev) throw std::invalid_argument("allocation vehicles must be PEVs");
        if (v.arrival >= v.departure) throw std::invalid_argument("vehicle '" + v.id + "' departs before it arrives");
    }
    if (!overcharge.empty() && overcharge.size() != vehicles.size()) {
        throw std::invalid_argument("one overcharge weight per vehicle is required");
    }
    if (!(alpha_sigma > 0.0) || !(shortfall_weight > 0.0)) throw std::invalid_argument("penalty weights must be positive");
}

std::vector<double> default_overcharge_weights(std::span<const StorageDevice> vehicles, double base) {
    std::vector<double> w;
    w.reserve(vehicles.size());
    for (const auto& v : vehicles) {
        const auto later = std::count_if(vehicles.begin(), vehicles.end(),
                                         [&](const StorageDevice& u) { return u.departure > v.departure; });
        w.push_back(base * (1.0 + 0.1 * static_cast<double>(later)));
    }
    return w;
}

namespace {

struct DeviceVars {
    int start = 0;  // first SOC point offset
    int stop = 0;   // last SOC point offset (exclusive power range end)
    std::vector<int> fwd, rev, soc;
    int shortfall = -1;
};

DeviceVars add_device(qp::Problem& qp, const StorageDevice& d, int start, int stop, double dt) {
    DeviceVars dv;
    dv.start = start;
    dv.stop = stop;
    const auto mu = d.efficiency();
    const bool net_bounds = d.p_min > 0.0 || d.p_max < 0.0;
    dv.soc.push_back(qp.add_variable(d.soc, d.soc));
    for (int h = start; h < stop; ++h) {
        const int f = qp.add_variable(0.0, std::max(d.p_max, 0.0));
        const int r = qp.add_variable(std::min(d.p_min, 0.0), 0.0);
        const int e = qp.add_variable(d.e_min, d.e_max);
        qp.add_equality({{e, 1.0}, {dv.soc.back(), -1.0}, {f, -mu.charge * dt}, {r, -mu.discharge * dt}}, 0.0);
        if (net_bounds) {
            qp.add_less_equal({{f, 1.0}, {r, 1.0}}, d.p_max);
            qp.add_greater_equal({{f, 1.0}, {r, 1.0}}, d.p_min);
        }
        qp.add_squared({{f, 1.0}}, 0.0, kRidge);
        qp.add_squared({{r, 1.0}}, 0.0, kRidge);
        dv.fwd.push_back(f);
        dv.rev.push_back(r);
        dv.soc.push_back(e);
    }
    return dv;
}

}  // namespace

AllocationResult allocate(const AllocationProblem& prob) {
    prob.validate();
    const int first = prob.first();
    const int n = prob.steps();
    const double dt = prob.step_hours;
    const auto weights =
        prob.overcharge.empty() ? default_overcharge_weights(prob.vehicles, 0.03) : prob.overcharge;

    qp::Problem qp;
    std::vector<int> sf, sr;
    for (int h = 0; h < n; ++h) {
        sf.push_back(qp.add_variable(0.0, qp::kInf));
        sr.push_back(qp.add_variable(-qp::kInf, 0.0));
        qp.add_linear(sf.back(), prob.alpha_sigma);
        qp.add_linear(sr.back(), -prob.alpha_sigma);
    }
    const DeviceVars ess = add_device(qp, prob.ess, 0, n, dt);
    for (int h = 0; h < n; ++h) {
        qp.add_linear(ess.fwd[static_cast<std::size_t>(h)], kThroughput);
        qp.add_linear(ess.rev[static_cast<std::size_t>(h)], -kThroughput);
    }

    if (prob.handoff_point > first && prob.handoff_point <= first + n) {
        const int e = ess.soc[static_cast<std::size_t>(prob.handoff_point - first)];
        const int above = qp.add_variable(0.0, qp::kInf);
        const int below = qp.add_variable(0.0, qp::kInf);
        qp.add_equality({{e, 1.0}, {above, -1.0}, {below, 1.0}}, prob.handoff_soc);
        qp.add_linear(above, prob.handoff_weight);
        qp.add_linear(below, prob.handoff_weight);
    }

    std::vector<DeviceVars> pev;
    for (std::size_t i = 0; i < prob.vehicles.size(); ++i) {
        const auto& v = prob.vehicles[i];
        const int start = std::clamp(v.arrival - first, 0, n);
        const int stop = std::clamp(v.departure - first, 0, n);
        if (v.departure <= first || start >= stop) {
            pev.emplace_back();
            pev.back().start = pev.back().stop = -1;
            continue;
        }
        DeviceVars dv = add_device(qp, v, start, stop, dt);
        dv.shortfall = qp.add_variable(0.0, qp::kInf);
        qp.add_linear(dv.shortfall, prob.shortfall_weight);
        const int last = dv.soc.back();
        if (v.departure <= first + n) {
            qp.add_greater_equal({{last, 1.0}, {dv.shortfall, 1.0}}, v.required_soc);
            qp.add_squared({{last, 1.0}}, -v.required_soc, weights[i]);
        } else {
            const double reach = std::max(v.p_max, 0.0) * v.efficiency().charge * dt *
                                 static_cast<double>(v.departure - (first + stop));
            qp.add_greater_equal({{last, 1.0}, {dv.shortfall, 1.0}}, v.required_soc - reach);
        }
        pev.push_back(std::move(dv));
    }

    for (int h = 0; h < n; ++h) {
        const auto u = static_cast<std::size_t>(h);
        std::vector<qp::Term> terms{{sf[u], 1.0}, {sr[u], 1.0}, {ess.fwd[u], -1.0}, {ess.rev[u], -1.0}};
        for (const auto& dv : pev) {
            if (h < dv.start || h >= dv.stop) continue;
            const auto j = static_cast<std::size_t>(h - dv.start);
            terms.push_back({dv.fwd[j], -1.0});
            terms.push_back({dv.rev[j], -1.0});
        }
        qp.add_equality(terms, prob.forecast[u] - prob.schedule[u].net());
    }

    // The ESS cannot charge and discharge at once. Steps where the optimum
    // cycles energy are pinned to the direction of their net power.
    qp::Solution sol;
    for (int round = 0;; ++round) {
        sol = qp::solve(qp);
        if (!sol.ok()) {
            throw std::runtime_error("stage-2 QP at step " + std::to_string(prob.step) + " failed: " +
                                     qp::to_string(sol.status));
        }
        bool pinned = false;
        for (int h = 0; h < n; ++h) {
            const int f = ess.fwd[static_cast<std::size_t>(h)];
            const int r = ess.rev[static_cast<std::size_t>(h)];
            if (std::min(sol[f], -sol[r]) <= kCycling) continue;
            if (sol[f] + sol[r] >= 0.0) {
                qp.set_bounds(r, 0.0, 0.0);
            } else {
                qp.set_bounds(f, 0.0, 0.0);
            }
            pinned = true;
        }
        if (!pinned) break;
        if (round == n) throw std::logic_error("stage-2 direction pinning did not settle");
    }

    auto flow = [&](int f, int r) { return PowerFlow{std::max(sol[f], 0.0), std::min(sol[r], 0.0)}; };
    AllocationResult out;
    out.objective = sol.objective;
    out.iterations = sol.iterations;
    for (int h = 0; h < n; ++h) {
        const auto u = static_cast<std::size_t>(h);
        PowerFlow s = flow(sf[u], sr[u]);
        if (s.fwd < kSigmaZero) s.fwd = 0.0;
        if (s.rev > -kSigmaZero) s.rev = 0.0;
        out.sigma.push_back(s);
        out.ess_power.push_back(flow(ess.fwd[u], ess.rev[u]));
    }
    for (int e : ess.soc) out.ess_soc.push_back(sol[e]);

    for (std::size_t i = 0; i < prob.vehicles.size(); ++i) {
        const auto& dv = pev[i];
        std::vector<PowerFlow> p(static_cast<std::size_t>(n));
        std::vector<double> e(static_cast<std::size_t>(n) + 1, prob.vehicles[i].soc);
        double shortfall = 0.0;
        if (dv.start >= 0) {
            for (int h = dv.start; h < dv.stop; ++h) {
                const auto j = static_cast<std::size_t>(h - dv.start);
                p[static_cast<std::size_t>(h)] = flow(dv.fwd[j], dv.rev[j]);
            }
            for (std::size_t j = 0; j < dv.soc.size(); ++j) e[static_cast<std::size_t>(dv.start) + j] = sol[dv.soc[j]];
            for (auto j = static_cast<std::size_t>(dv.stop) + 1; j < e.size(); ++j) e[j] = e[static_cast<std::size_t>(dv.stop)];
            shortfall = std::max(sol[dv.shortfall], 0.0);
        }
        out.vehicle_power.push_back(std::move(p));
        out.vehicle_soc.push_back(std::move(e));
        out.shortfall.push_back(shortfall);
    }
    return out;
}

BalancingOutcome balance_realtime(double p_ref, double l_realized, std::span<const PowerFlow> pev_powers,
                                  const StorageDevice& ess, double step_hours) {
    double pev_total = 0.0;
    for (const auto& p : pev_powers) pev_total += p.net();
    const auto mu = ess.efficiency();

    BalancingOutcome out;
    out.desired = p_ref - l_realized - pev_total;
    // SOC limits carry the same tolerance band as check_limits.
    const double e_hi = ess.e_max + kLimitTolerance;
    const double e_lo = ess.e_min - kLimitTolerance;
    double hi = ess.p_max;
    double lo = ess.p_min;
    if (mu.charge > 0.0) hi = std::min(hi, std::max((e_hi - ess.soc) / (mu.charge * step_hours), 0.0));
    lo = std::max(lo, std::min((e_lo - ess.soc) / (mu.discharge * step_hours), 0.0));
    out.ess_power = split(std::clamp(out.desired, std::min(lo, hi), hi));
    out.ess_soc = std::clamp(step_soc(ess.soc, out.ess_power, mu, step_hours), std::min(e_lo, ess.soc),
                             std::max(e_hi, ess.soc));
    // Unclipped, the grid meets the reference by construction.
    out.grid = out.clipped() ? split(l_realized + pev_total + out.ess_power.net()) : split(p_ref);
    out.residual = p_ref - out.grid.net();
    return out;
}

void write_operation_log(std::ostream& os, std::span<const OperationRecord> records) {
    text::write_row(os, {"step", "series", "value"});
    for (const auto& r : records) {
        const std::string k = std::to_string(r.step);
        auto put = [&](const std::string& series, double v) { text::write_row(os, {k, series, text::exact(v)}); };
        put("g_s", r.scheduled.net());
        put("sigma", r.sigma.net());
        put("p_ref", r.p_ref);
        put("l", r.prosumption);
        put("l_baseline", r.baseline);
        put("g", r.grid.net());
        put("residual", r.residual);
        put("p_ess", r.ess_power.net());
        put("e_ess", r.ess_soc);
        for (std::size_t i = 0; i < r.vehicle_ids.size(); ++i) {
            put("p_" + r.vehicle_ids[i], r.vehicle_power[i].net());
            put("e_" + r.vehicle_ids[i], r.vehicle_soc[i]);
        }
    }
}

OperationSeries read_operation_log(std::istream& is) {
    const auto t = text::read_table(is);
    const auto c_step = t.column("step");
    const auto c_series = t.column("series");
    const auto c_value = t.column("value");
    std::map<int, std::map<std::string, double>> by_step;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        by_step[static_cast<int>(t.integer(r, c_step))][t.rows[r][c_series]] = t.number(r, c_value);
    }
    OperationSeries s;
    for (const auto& [k, values] : by_step) {
        auto get = [&, k = k](const char* name) {
            const auto it = values.find(name);
            if (it == values.end()) throw std::runtime_error("log step " + std::to_string(k) + " lacks series " + name);
            return it->second;
        };
        s.step.push_back(k);
        s.scheduled.push_back(get("g_s"));
        s.grid.push_back(get("g"));
        s.prosumption.push_back(get("l"));
        s.baseline.push_back(get("l_baseline"));
        s.residual.push_back(get("residual"));
    }
    return s;
}

}  // namespace dcs
