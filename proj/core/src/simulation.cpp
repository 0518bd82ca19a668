#include "dcs/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

namespace dcs {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) { return mix(mix(seed ^ mix(a)) ^ b); }

double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

/// Lattice node of `d` holding probability level u.
double discrete_sample(const EmpiricalDistribution& d, double u) {
    const auto pdf = d.pdf();
    double acc = 0.0;
    for (std::size_t i = 0; i < pdf.size(); ++i) {
        acc += pdf[i];
        if (u * d.mass() < acc) return d.node(i);
    }
    return d.hi();
}

double expected_arrival(const Scenario& s, const StorageDevice& v) {
    return s.simulation.deterministic ? v.arrival_soc.value_or(v.soc) : s.arrival_soc.mean();
}

}  // namespace

std::vector<StorageDevice> day_fleet(const Scenario& s, int day, std::span<const double> arrival_soc) {
    if (arrival_soc.size() != s.fleet.size()) throw std::invalid_argument("one arrival SOC per fleet slot is required");
    const int base = day * s.grid.length;
    std::vector<StorageDevice> out;
    for (std::size_t i = 0; i < s.fleet.size(); ++i) {
        const auto& slot = s.fleet[i];
        StorageDevice v = make_pev(slot.id, s.pev.p_min, s.pev.p_max, s.pev.e_min, s.pev.e_max, s.pev.loss,
                                   base + slot.arrival_hour, base + slot.departure_hour, s.pev.required_soc);
        v.soc = arrival_soc[i];
        v.arrival_soc = arrival_soc[i];
        out.push_back(std::move(v));
    }
    return out;
}

ScheduleProblem make_schedule_problem(const Scenario& s, ProsumptionSource& source, int day,
                                      std::vector<StorageDevice> fleet, double initial_soc,
                                      const PowerFlow& previous_grid, double reliability) {
    ScheduleProblem p;
    p.grid = s.grid;
    p.grid.begin = day * s.grid.length;
    p.grid.decision_step = p.grid.begin - s.decision_lead;
    p.ess = s.ess;
    p.ess.soc = initial_soc;
    for (const auto& v : fleet) {
        p.arrival_soc.push_back(s.simulation.deterministic
                                    ? EmpiricalDistribution::point_mass(v.arrival_soc.value_or(v.soc),
                                                                        s.forecasts.grid_step)
                                    : s.arrival_soc.distribution(s.forecasts.grid_step));
    }
    p.fleet = FleetCalendar(std::move(fleet));
    p.forecast = source.day_ahead(p.grid.decision_step, p.grid.begin, p.grid.extended_steps());
    p.reliability = reliability;
    p.nu = s.nu;
    p.initial_soc = initial_soc;
    p.previous_grid = previous_grid;
    p.departure_rule = s.simulation.departure_rule;
    return p;
}

DispatchSchedule fallback_schedule(const ScheduleProblem& prob) {
    DispatchSchedule dis;
    dis.begin = prob.grid.begin;
    dis.length = prob.grid.length;
    const int n = prob.grid.extended_steps();
    const double dt = prob.grid.step_hours;
    const auto mu = prob.ess.efficiency();
    double e = prob.initial_soc;
    dis.soc.push_back(e);
    for (int i = 0; i < n; ++i) {
        const int k = prob.grid.begin + i;
        double charge = 0.0;
        std::vector<double> jumps;
        for (std::size_t v = 0; v < prob.fleet.size(); ++v) {
            const auto& d = prob.fleet.vehicles()[v];
            const double mean = prob.arrival_soc[v].mean();
            if (d.connected(k)) charge += (d.required_soc - mean) / (static_cast<double>(d.departure - d.arrival) * dt);
            if (d.arrival == k + 1) jumps.push_back(mean);
        }
        const PowerFlow storage = split(charge);
        dis.storage.push_back(storage);
        dis.grid.push_back(split(prob.forecast.expected[static_cast<std::size_t>(i)] + charge));
        e = step_aggregate_soc(e, storage, jumps, mu, dt);
        dis.soc.push_back(e);
        dis.slack.push_back(0.0);
    }
    return dis;
}

namespace {

class WeekSimulator {
public:
    WeekSimulator(const Scenario& s, int start_doy, double reliability, std::uint64_t seed)
        : s_(s), S_(s.grid.length), D_(s.simulation.days_per_week), T_(S_ * D_), dt_(s.grid.step_hours) {
        run_.start_doy = start_doy;
        run_.reliability = reliability;
        source_ = make_source(s, start_doy, D_, mix(seed, static_cast<std::uint64_t>(start_doy)));
        run_.source = source_;
        std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(start_doy), 1));
        for (int d = 0; d < D_; ++d) {
            std::vector<double> socs;
            for (std::size_t i = 0; i < s.fleet.size(); ++i) socs.push_back(sample_arrival_soc(s.arrival_soc, rng));
            for (auto& v : day_fleet(s, d, socs)) {
                pev_day_.push_back(d);
                pevs_.push_back(std::move(v));
            }
        }
        for (const auto& v : pevs_) pev_soc_.push_back(v.soc);
        ess_soc_ = s.ess.e_min + s.simulation.initial_soc_fraction * (s.ess.e_max - s.ess.e_min);
        run_.days.resize(static_cast<std::size_t>(D_));
        handoff_.resize(static_cast<std::size_t>(D_));
        day_start_ess_.assign(static_cast<std::size_t>(D_), 0.0);
        day_losses_.assign(static_cast<std::size_t>(D_), 0.0);
        day_exchange_.assign(static_cast<std::size_t>(D_), 0.0);
    }

    WeekRun run() {
        schedule_day(0, ess_soc_);
        allocate_from(0);
        for (int t = 0; t < T_; ++t) {
            operate(t);
            const int k = t + 1;
            if ((k + s_.decision_lead) % S_ == 0) {
                const int d = (k + s_.decision_lead) / S_;
                if (d < D_) schedule_day(d, estimate_initial_soc(d, k));
            }
            if (k < T_) allocate_from(k);
        }
        finish_days();
        return std::move(run_);
    }

private:
    std::vector<StorageDevice> fleet_of(int d) const {
        std::vector<StorageDevice> out;
        for (std::size_t i = 0; i < pevs_.size(); ++i) {
            if (pev_day_[i] == d) out.push_back(pevs_[i]);
        }
        return out;
    }

    const PowerFlow& committed(int k) const { return run_.days[static_cast<std::size_t>(k / S_)].schedule.at(k); }

    void schedule_day(int d, double initial_soc) {
        auto& day = run_.days[static_cast<std::size_t>(d)];
        const PowerFlow previous = d == 0 ? PowerFlow{} : committed(d * S_ - 1);
        day.problem = make_schedule_problem(s_, *source_, d, fleet_of(d), initial_soc, previous, run_.reliability);
        try {
            day.schedule = solve_dispatch(day.problem, s_.costs);
        } catch (const std::exception& e) {
            day.failure = e.what();
            day.schedule = fallback_schedule(day.problem);
        }
        handoff_[static_cast<std::size_t>(d)] = initial_soc;
    }

    /// ESS SOC at the next window start: a stage-2 allocation from the
    /// measured state to the end of the committed day.
    double estimate_initial_soc(int d, int k0) {
        const auto p = allocation_problem(k0, d * S_ - k0 - 1);
        return std::clamp(allocate(p).ess_soc.back(), s_.ess.e_min, s_.ess.e_max);
    }

    AllocationProblem allocation_problem(int first, int horizon) {
        AllocationProblem p;
        p.step = first - 1;
        p.horizon = horizon;
        p.step_hours = dt_;
        p.alpha_sigma = s_.costs.alpha_sigma;
        for (int h = 0; h <= p.horizon; ++h) {
            const int k = first + h;
            p.schedule.push_back(committed(k));
            if (first == 0) {
                p.forecast.push_back(run_.days[0].problem.forecast.expected[static_cast<std::size_t>(k)]);
            } else {
                p.forecast.push_back(source_->intraday(first - 1, k));
            }
        }
        p.ess = s_.ess;
        p.ess.soc = ess_soc_;
        members_.clear();
        for (std::size_t i = 0; i < pevs_.size(); ++i) {
            const auto& v = pevs_[i];
            if (v.departure <= first || v.arrival > first + p.horizon) continue;
            StorageDevice u = v;
            u.soc = v.arrival <= first ? pev_soc_[i] : expected_arrival(s_, v);
            p.vehicles.push_back(std::move(u));
            members_.push_back(i);
        }
        p.overcharge = default_overcharge_weights(p.vehicles, s_.costs.overcharge);
        for (int d = first / S_ + 1; d < D_ && d * S_ <= first + p.horizon + 1; ++d) {
            if (!handoff_[static_cast<std::size_t>(d)]) continue;
            p.handoff_point = d * S_;
            p.handoff_soc = *handoff_[static_cast<std::size_t>(d)];
        }
        return p;
    }

    void allocate_from(int first) {
        const auto p = allocation_problem(first, std::min(s_.simulation.horizon, T_ - first - 1));
        plan_ = allocate(p);
        plan_vehicles_ = members_;
        plan_first_ = first;
    }

    void operate(int t) {
        if (plan_first_ != t) throw std::logic_error("stage-2 plan does not start at the current step");
        const int d = t / S_;
        const auto du = static_cast<std::size_t>(d);
        if (t % S_ == 0) day_start_ess_[du] = ess_soc_;

        OperationRecord rec;
        rec.step = t;
        rec.scheduled = committed(t);
        rec.sigma = plan_.sigma.at(0);
        rec.p_ref = reference_power(rec.scheduled, rec.sigma);
        rec.prosumption = source_->realized(t);

        std::vector<PowerFlow> powers;
        std::vector<StorageDevice> present;
        for (std::size_t j = 0; j < plan_vehicles_.size(); ++j) {
            const std::size_t i = plan_vehicles_[j];
            if (!pevs_[i].connected(t)) continue;
            powers.push_back(plan_.vehicle_power[j].at(0));
            present.push_back(pevs_[i]);
            rec.vehicle_ids.push_back(pevs_[i].id + "_d" + std::to_string(pev_day_[i]));
        }
        rec.baseline = baseline_prosumption(rec.prosumption, t, present, dt_);

        StorageDevice ess = s_.ess;
        ess.soc = ess_soc_;
        const auto out = balance_realtime(rec.p_ref, rec.prosumption, powers, ess, dt_);
        day_losses_[du] += s_.ess.loss * (out.ess_power.fwd - out.ess_power.rev) * dt_;
        ess_soc_ = out.ess_soc;

        std::size_t p = 0;
        for (std::size_t j = 0; j < plan_vehicles_.size(); ++j) {
            const std::size_t i = plan_vehicles_[j];
            if (!pevs_[i].connected(t)) continue;
            const auto& v = pevs_[i];
            const PowerFlow pw = powers[p++];
            day_losses_[static_cast<std::size_t>(pev_day_[i])] += v.loss * (pw.fwd - pw.rev) * dt_;
            pev_soc_[i] = std::clamp(step_soc(pev_soc_[i], pw, v.efficiency(), dt_), v.e_min, v.e_max);
            rec.vehicle_power.push_back(pw);
            rec.vehicle_soc.push_back(pev_soc_[i]);
            if (t + 1 == v.departure) {
                run_.days[static_cast<std::size_t>(pev_day_[i])].metrics.terminal_margin.push_back(pev_soc_[i] -
                                                                                                  v.required_soc);
            }
        }

        rec.grid = out.grid;
        rec.residual = out.residual;
        rec.ess_power = out.ess_power;
        rec.ess_soc = out.ess_soc;
        day_exchange_[du] += (out.grid.net() - rec.prosumption) * dt_;
        if (t % S_ == S_ - 1) day_end_ess_.push_back(ess_soc_);
        run_.log.push_back(std::move(rec));
    }

    void finish_days() {
        for (int d = 0; d < D_; ++d) {
            const auto du = static_cast<std::size_t>(d);
            auto& day = run_.days[du];
            auto& m = day.metrics;
            m.week_start_doy = run_.start_doy;
            m.day = d;
            m.reliability = run_.reliability;
            m.valid = day.failure.empty();
            m.total_slack = day.schedule.total_slack();
            m.solve_seconds = day.schedule.diagnostics.seconds;
            m.schedule_cost = day.schedule.committed_cost(s_.costs, day.problem.previous_grid);

            std::vector<double> g, gs, lb;
            for (int t = d * S_; t < (d + 1) * S_; ++t) {
                const auto& r = run_.log[static_cast<std::size_t>(t)];
                g.push_back(r.grid.net());
                gs.push_back(r.scheduled.net());
                lb.push_back(r.baseline);
            }
            m.tracking = tracking_ratio(g, gs, s_.simulation.gamma);
            m.balancing_energy = balancing_energy(g, gs, dt_);
            m.imbalance_cost = imbalance_cost(g, gs, s_.costs);
            m.max_ramp_baseline = max_step_change(lb);
            m.max_ramp_grid = max_step_change(g);

            double device = day_end_ess_[du] - day_start_ess_[du];
            for (std::size_t i = 0; i < pevs_.size(); ++i) {
                if (pev_day_[i] == d) device += pev_soc_[i] - pevs_[i].arrival_soc.value_or(pevs_[i].soc);
            }
            m.energy_audit_error = std::abs(day_exchange_[du] - device - day_losses_[du]);
        }
    }

    const Scenario& s_;
    int S_;
    int D_;
    int T_;
    double dt_;
    std::shared_ptr<ProsumptionSource> source_;
    std::vector<StorageDevice> pevs_;
    std::vector<int> pev_day_;
    std::vector<double> pev_soc_;
    double ess_soc_ = 0.0;
    AllocationResult plan_;
    int plan_first_ = -1;
    std::vector<std::size_t> plan_vehicles_;
    std::vector<std::size_t> members_;
    std::vector<double> day_start_ess_, day_end_ess_, day_losses_, day_exchange_;
    std::vector<std::optional<double>> handoff_;  // ê(k_b) each day was scheduled from
    WeekRun run_;
};

}  // namespace

WeekRun run_week(const Scenario& s, int start_doy, double reliability, std::uint64_t seed) {
    s.validate();
    return WeekSimulator(s, start_doy, reliability, seed).run();
}

std::vector<WeekRun> run_matrix(const Scenario& s, std::span<const double> reliability, std::uint64_t seed,
                                const Progress& progress) {
    std::vector<WeekRun> out;
    for (double r : reliability) {
        for (int doy : s.simulation.week_start_doy) {
            out.push_back(run_week(s, doy, r, seed));
            if (progress) progress(out.back());
        }
    }
    return out;
}

MetricsReport report(std::span<const WeekRun> runs) {
    std::vector<DayMetrics> days;
    for (const auto& w : runs) {
        for (const auto& d : w.days) days.push_back(d.metrics);
    }
    return summarize(std::move(days));
}

double ChanceAudit::worst() const {
    double w = 1.0;
    for (double p : probability) w = std::min(w, p);
    return w;
}

ChanceAudit audit_chance_constraints(const ScheduleProblem& prob, const DispatchSchedule& dis, int draws,
                                     std::uint64_t seed, ProsumptionSource* source) {
    if (draws < 1) throw std::invalid_argument("the audit needs at least one draw");
    const int n = static_cast<int>(dis.steps());
    const auto vehicles = prob.fleet.vehicles();
    const std::size_t dims = 1 + vehicles.size();
    if (dims > std::size(kPrimes)) throw std::invalid_argument("too many vehicles for the Halton sequence");
    if (dis.energy_min.size() != dis.soc.size() || dis.energy_max.size() != dis.soc.size()) {
        throw std::invalid_argument("schedule lacks energy limits");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> shift(dims);
    for (auto& x : shift) x = U(rng);
    std::vector<std::vector<double>> u(static_cast<std::size_t>(draws), std::vector<double>(dims));
    for (int r = 0; r < draws; ++r) {
        for (std::size_t j = 0; j < dims; ++j) {
            const double v = radical_inverse(static_cast<std::uint64_t>(r) + 1, kPrimes[j]) + shift[j];
            u[static_cast<std::size_t>(r)][j] = v - std::floor(v);
        }
    }

    // Arrival SOC deviation from the mean at each SOC point for every draw.
    std::vector<std::vector<double>> arrival_dev(static_cast<std::size_t>(draws), std::vector<double>(n + 1, 0.0));
    for (int r = 0; r < draws; ++r) {
        auto& dev = arrival_dev[static_cast<std::size_t>(r)];
        for (std::size_t v = 0; v < vehicles.size(); ++v) {
            const auto& dist = prob.arrival_soc[v];
            const double x = discrete_sample(dist, u[static_cast<std::size_t>(r)][1 + v]) - dist.mean();
            const int a = vehicles[v].arrival - dis.begin;
            for (int j = std::max(a, 1); j <= n; ++j) dev[static_cast<std::size_t>(j)] += x;
        }
    }

    auto coverage = [&](auto&& energy_error) {
        std::vector<double> out;
        for (int j = 1; j <= n; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            int hit = 0;
            for (int r = 0; r < draws; ++r) {
                const double e = dis.soc[ju] - energy_error(r, j) + arrival_dev[static_cast<std::size_t>(r)][ju];
                if (e >= dis.energy_min[ju] - 1e-9 && e <= dis.energy_max[ju] + 1e-9) ++hit;
            }
            out.push_back(static_cast<double>(hit) / draws);
        }
        return out;
    };

    ChanceAudit a;
    a.begin = dis.begin;
    a.reliability = prob.reliability;
    a.probability = coverage([&](int r, int j) {
        const auto& err = prob.forecast.energy_error[static_cast<std::size_t>(j)];
        // Point masses are exact, as in the scheduler.
        return err.size() == 1 ? err.lo() : err.quantile(u[static_cast<std::size_t>(r)][0]);
    });
    if (source != nullptr) {
        try {
            const auto paths = source->energy_error_draws(prob.grid.decision_step, dis.begin, n, draws, mix(seed, 7));
            a.generator = coverage([&](int r, int j) {
                return paths[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
            });
        } catch (const std::runtime_error&) {
            a.generator.clear();
        }
    }
    return a;
}

}  // namespace dcs
