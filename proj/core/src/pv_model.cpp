#include "dcs/pv_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "dcs/text_io.hpp"

namespace dcs {

namespace {

constexpr int kHours = 24;

double season(int doy) { return std::cos(2.0 * std::numbers::pi * (doy - 355) / 365.0); }

const boost::math::normal_distribution<double> kStdNormal;

double phi(double x) { return boost::math::pdf(kStdNormal, x); }
double Phi(double x) { return boost::math::cdf(kStdNormal, x); }

// E[max(Y − c, 0)] for Y ~ N(m, s²).
double call(double m, double s, double c) {
    if (s <= 0.0) return std::max(m - c, 0.0);
    const double z = (m - c) / s;
    return (m - c) * Phi(z) + s * phi(z);
}

// E[clamp(Y, 0, 1)] for Y ~ N(m, s²).
double clipped_mean(double m, double s) { return call(m, s, 0.0) - call(m, s, 1.0); }

}  // namespace

double clear_sky_kw(int doy, int hour, double capacity_kw) {
    const double length = 12.0 + 2.5 * season(doy);
    const double sunrise = 12.0 - 0.5 * length;
    const double peak = 0.75 + 0.15 * season(doy);
    constexpr int kSub = 12;
    double acc = 0.0;
    for (int i = 0; i < kSub; ++i) {
        const double t = hour + (i + 0.5) / kSub;
        const double x = (t - sunrise) / length;
        if (x > 0.0 && x < 1.0) acc += std::pow(std::sin(std::numbers::pi * x), 1.2);
    }
    return capacity_kw * peak * acc / kSub;
}

std::vector<std::vector<double>> ProsumptionSource::energy_error_draws(int, int, int, int, std::uint64_t) {
    throw std::runtime_error("this prosumption source cannot draw forecast errors");
}

SyntheticPv::SyntheticPv(const PvSettings& pv, const ForecastSettings& fc, int start_doy, int days,
                         std::uint64_t seed, bool deterministic)
    : pv_(pv), fc_(fc), start_doy_(start_doy), deterministic_(deterministic), seed_(seed) {
    if (days < 1) throw std::invalid_argument("synthetic PV needs at least one day");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const int total_days = days + 2;
    const double rho = pv_.day_to_day_correlation;
    double z = N(rng);
    for (int d = 0; d < total_days; ++d) {
        if (d > 0) z = rho * z + std::sqrt(1.0 - rho * rho) * N(rng);
        level_.push_back(0.1 + 0.9 * Phi(0.4 + z));
    }
    const double f = pv_.hourly_correlation;
    for (int d = 0; d < total_days; ++d) {
        const double s = spread(d);
        double eta = s * N(rng);
        for (int h = 0; h < kHours; ++h) {
            if (h > 0) eta = f * eta + s * std::sqrt(1.0 - f * f) * N(rng);
            eta_.push_back(eta);
        }
    }
}

double SyntheticPv::spread(int day) const {
    if (deterministic_) return 0.0;
    const double a = daily_level(day);
    return pv_.spread_base + pv_.spread_peak * 4.0 * a * (1.0 - a);
}

int SyntheticPv::day_of(int k) const {
    if (k < 0 || k >= static_cast<int>(eta_.size())) {
        throw std::out_of_range("step " + std::to_string(k) + " outside the synthetic PV horizon");
    }
    return k / kHours;
}

double SyntheticPv::clear_sky(int k) const {
    const int day = day_of(k);
    return clear_sky_kw((start_doy_ - 1 + day) % 365 + 1, k % kHours, pv_.capacity_kw);
}

double SyntheticPv::realized(int k) {
    const double x = std::clamp(daily_level(day_of(k)) + eta_[static_cast<std::size_t>(k)], 0.0, 1.0);
    return -clear_sky(k) * x;
}

QuantileForecast SyntheticPv::quantiles(int issue, int k) const {
    QuantileForecast qf;
    qf.step = k;
    qf.issue_step = issue;
    const double cs = clear_sky(k);
    const double a = daily_level(day_of(k));
    const double s = spread(day_of(k));
    for (double tau : fc_.levels) {
        const double upper_pv = std::clamp(a + s * boost::math::quantile(kStdNormal, 1.0 - tau), 0.0, 1.0);
        qf.levels.push_back(tau);
        qf.values.push_back(-cs * upper_pv);
    }
    return qf;
}

std::vector<double> SyntheticPv::sample_path(int begin, int steps, std::mt19937_64& rng) const {
    std::normal_distribution<double> N(0.0, 1.0);
    const double f = pv_.hourly_correlation;
    std::vector<double> l;
    l.reserve(static_cast<std::size_t>(steps));
    double eta = 0.0;
    for (int k = begin; k < begin + steps; ++k) {
        const int day = day_of(k);
        const double s = spread(day);
        eta = (k == begin || k % kHours == 0) ? s * N(rng) : f * eta + s * std::sqrt(1.0 - f * f) * N(rng);
        l.push_back(-clear_sky(k) * std::clamp(daily_level(day) + eta, 0.0, 1.0));
    }
    return l;
}

ForecastBundle SyntheticPv::day_ahead(int issue, int begin, int steps) {
    if (issue >= begin) throw std::invalid_argument("day-ahead forecasts must be issued before the window");
    if (begin % kHours != 0) throw std::invalid_argument("synthetic day-ahead windows start at midnight");
    ForecastBundle b;
    b.begin = begin;
    const double h = fc_.grid_step;
    if (deterministic_) {
        for (int k = begin; k < begin + steps; ++k) {
            const double l = realized(k);
            b.expected.push_back(l);
            b.lower.push_back(l);
            b.upper.push_back(l);
        }
        for (int j = 0; j <= steps; ++j) b.energy_error.push_back(EmpiricalDistribution::point_mass(0.0, h));
        return b;
    }
    for (int k = begin; k < begin + steps; ++k) {
        const auto qf = quantiles(issue, k);
        const auto [lo, hi] = robust_bounds(qf, fc_.coverage);
        b.expected.push_back(std::clamp(cdf_from_quantiles(qf).mean(), lo, hi));
        b.lower.push_back(lo);
        b.upper.push_back(hi);
    }
    std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(issue + 1)));
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(steps) + 1);
    for (int r = 0; r < fc_.ensemble_size; ++r) {
        const auto path = sample_path(begin, steps, rng);
        double acc = 0.0;
        partial[0].push_back(0.0);
        for (int j = 0; j < steps; ++j) {
            acc += path[static_cast<std::size_t>(j)] - b.expected[static_cast<std::size_t>(j)];
            partial[static_cast<std::size_t>(j) + 1].push_back(acc);
        }
    }
    b.energy_error.push_back(EmpiricalDistribution::point_mass(0.0, h));
    for (int j = 1; j <= steps; ++j) {
        b.energy_error.push_back(EmpiricalDistribution::from_samples(partial[static_cast<std::size_t>(j)], h));
    }
    return b;
}

std::vector<std::vector<double>> SyntheticPv::energy_error_draws(int issue, int begin, int steps, int draws,
                                                                 std::uint64_t seed) {
    const auto bundle = day_ahead(issue, begin, steps);
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(draws));
    for (int r = 0; r < draws; ++r) {
        const auto path = sample_path(begin, steps, rng);
        std::vector<double> e{0.0};
        for (int j = 0; j < steps; ++j) {
            e.push_back(e.back() + path[static_cast<std::size_t>(j)] - bundle.expected[static_cast<std::size_t>(j)]);
        }
        out.push_back(std::move(e));
    }
    return out;
}

double SyntheticPv::intraday(int k, int h) {
    if (h <= k) throw std::invalid_argument("intraday forecasts look ahead");
    if (deterministic_) return realized(h);
    const int day = day_of(h);
    const double a = daily_level(day);
    const double s = spread(day);
    double m = 0.0;
    double sd = s;
    if (k >= 0 && day_of(k) == day) {
        const double decay = std::pow(pv_.hourly_correlation, h - k);
        m = decay * eta_[static_cast<std::size_t>(k)];
        sd = s * std::sqrt(1.0 - decay * decay);
    }
    return -clear_sky(h) * clipped_mean(a + m, sd);
}

TraceSource::TraceSource(const std::string& trace_path, const std::string& quantile_path,
                         const ForecastSettings& fc, int min_history)
    : fc_(fc), min_history_(min_history) {
    const auto trace = text::read_table_file(trace_path);
    const auto ts = trace.column("step");
    const auto tl = trace.column("l_kw");
    for (std::size_t r = 0; r < trace.rows.size(); ++r) {
        trace_[static_cast<int>(trace.integer(r, ts))] = trace.number(r, tl);
    }
    const auto q = text::read_table_file(quantile_path);
    const auto qi = q.column("issue_step");
    const auto qs = q.column("step");
    const auto qt = q.column("tau");
    const auto qv = q.column("value");
    for (std::size_t r = 0; r < q.rows.size(); ++r) {
        const int issue = static_cast<int>(q.integer(r, qi));
        const int step = static_cast<int>(q.integer(r, qs));
        auto& f = quantiles_[issue][step];
        f.issue_step = issue;
        f.step = step;
        f.levels.push_back(q.number(r, qt));
        f.values.push_back(q.number(r, qv));
    }
    for (auto& [issue, by_step] : quantiles_) {
        for (auto& [step, f] : by_step) {
            std::vector<std::size_t> order(f.levels.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&f](std::size_t a, std::size_t b) { return f.levels[a] < f.levels[b]; });
            QuantileForecast sorted{step, issue, {}, {}};
            for (std::size_t i : order) {
                sorted.levels.push_back(f.levels[i]);
                sorted.values.push_back(f.values[i]);
            }
            sorted.validate();
            f = std::move(sorted);
        }
    }
}

double TraceSource::realized(int k) {
    const auto it = trace_.find(k);
    if (it == trace_.end()) throw std::out_of_range("trace has no value for step " + std::to_string(k));
    return it->second;
}

const QuantileForecast& TraceSource::forecast(int issue, int k) const {
    const auto i = quantiles_.find(issue);
    if (i == quantiles_.end()) throw std::out_of_range("no forecast issued at step " + std::to_string(issue));
    const auto j = i->second.find(k);
    if (j == i->second.end()) {
        throw std::out_of_range("forecast issued at " + std::to_string(issue) + " lacks step " + std::to_string(k));
    }
    return j->second;
}

ForecastBundle TraceSource::day_ahead(int issue, int begin, int steps) {
    ForecastBundle b;
    b.begin = begin;
    const double h = fc_.grid_step;
    for (int k = begin; k < begin + steps; ++k) {
        const auto& qf = forecast(issue, k);
        const auto [lo, hi] = robust_bounds(qf, fc_.coverage);
        b.expected.push_back(std::clamp(cdf_from_quantiles(qf).mean(), lo, hi));
        b.lower.push_back(lo);
        b.upper.push_back(hi);
    }

    // Earlier issues with the same lead whose windows were fully realized by `issue`.
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(steps) + 1);
    for (int lag = kHours; issue - lag >= quantiles_.begin()->first; lag += kHours) {
        const int past_issue = issue - lag;
        const int past_begin = begin - lag;
        if (past_begin + steps > issue || !quantiles_.count(past_issue)) continue;
        std::vector<double> sums{0.0};
        bool complete = true;
        for (int j = 0; j < steps && complete; ++j) {
            const int k = past_begin + j;
            const auto lk = trace_.find(k);
            const auto& by_step = quantiles_.at(past_issue);
            const auto fk = by_step.find(k);
            if (lk == trace_.end() || fk == by_step.end()) {
                complete = false;
                break;
            }
            sums.push_back(sums.back() + lk->second - cdf_from_quantiles(fk->second).mean());
        }
        if (!complete) continue;
        for (std::size_t j = 0; j < sums.size(); ++j) partial[j].push_back(sums[j]);
    }

    b.energy_error.push_back(EmpiricalDistribution::point_mass(0.0, h));
    if (static_cast<int>(partial[0].size()) >= min_history_) {
        for (int j = 1; j <= steps; ++j) {
            b.energy_error.push_back(EmpiricalDistribution::from_samples(partial[static_cast<std::size_t>(j)], h));
        }
        return b;
    }
    EmpiricalDistribution acc = EmpiricalDistribution::point_mass(0.0, h);
    for (int j = 0; j < steps; ++j) {
        QuantileForecast err = forecast(issue, begin + j);
        const double mean = b.expected[static_cast<std::size_t>(j)];
        for (double& v : err.values) v -= mean;
        acc = convolve(acc, distribution_from_quantiles(err, ValueGrid{h, std::nullopt, std::nullopt})).trimmed(1e-12);
        b.energy_error.push_back(acc);
    }
    return b;
}

double TraceSource::intraday(int k, int h) {
    if (h <= k) throw std::invalid_argument("intraday forecasts look ahead");
    for (auto it = quantiles_.upper_bound(k); it != quantiles_.begin();) {
        --it;
        const auto f = it->second.find(h);
        if (f != it->second.end()) return cdf_from_quantiles(f->second).mean();
    }
    throw std::out_of_range("no forecast covers step " + std::to_string(h));
}

std::unique_ptr<ProsumptionSource> make_source(const Scenario& s, int start_doy, int days, std::uint64_t seed) {
    if (s.forecasts.source == "files") {
        return std::make_unique<TraceSource>(s.forecasts.trace_path, s.forecasts.quantile_path, s.forecasts);
    }
    if (std::abs(s.grid.step_hours - 1.0) > 1e-12) throw std::invalid_argument("synthetic PV runs on hourly steps");
    return std::make_unique<SyntheticPv>(s.pv, s.forecasts, start_doy, days, seed, s.simulation.deterministic);
}

}  // namespace dcs
