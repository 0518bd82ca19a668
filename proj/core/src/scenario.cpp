#include "dcs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/lognormal.hpp>
#include <yaml-cpp/yaml.h>

#include "dcs/text_io.hpp"

namespace dcs {

void ArrivalHistogram::validate() const {
    if (soc.empty() || soc.size() != frequency.size()) {
        throw std::invalid_argument("arrival histogram needs matching, nonempty bins and frequencies");
    }
    for (std::size_t i = 0; i < soc.size(); ++i) {
        if (!(frequency[i] >= 0.0) || !std::isfinite(frequency[i])) {
            throw std::invalid_argument("arrival histogram frequencies must be finite and nonnegative");
        }
        if (i > 0 && !(soc[i] > soc[i - 1])) throw std::invalid_argument("arrival histogram bins must increase");
    }
    if (!(std::accumulate(frequency.begin(), frequency.end(), 0.0) > 0.0)) {
        throw std::invalid_argument("arrival histogram has no mass");
    }
}

void ArrivalHistogram::check_support(double e_min, double e_max) const {
    for (std::size_t i = 0; i < soc.size(); ++i) {
        if (frequency[i] > 0.0 && (soc[i] < e_min - kLimitTolerance || soc[i] > e_max + kLimitTolerance)) {
            throw std::invalid_argument("arrival SOC bin " + text::exact(soc[i]) + " kWh outside the vehicle limits");
        }
    }
}

double ArrivalHistogram::mean() const {
    const double total = std::accumulate(frequency.begin(), frequency.end(), 0.0);
    return std::inner_product(soc.begin(), soc.end(), frequency.begin(), 0.0) / total;
}

EmpiricalDistribution ArrivalHistogram::distribution(double step) const {
    validate();
    return EmpiricalDistribution::from_points(soc, frequency, step);
}

ArrivalHistogram commute_histogram(const CommuteModel& m, double capacity_kwh, double required_kwh,
                                   double floor_kwh) {
    if (!(m.median_km > 0.0 && m.sigma > 0.0 && m.autonomy_km > 0.0 && m.bin_kwh > 0.0)) {
        throw std::invalid_argument("commute model parameters must be positive");
    }
    const boost::math::lognormal_distribution<double> trip(std::log(m.median_km), m.sigma);
    const double km_per_kwh = m.autonomy_km / capacity_kwh;
    // Arrival SOC s = required − 2 D / km_per_kwh, so s >= x iff D <= (required − x) km_per_kwh / 2.
    auto p_soc_at_least = [&](double x) {
        const double d = (required_kwh - x) * km_per_kwh / 2.0;
        return d <= 0.0 ? 0.0 : boost::math::cdf(trip, d);
    };
    ArrivalHistogram h;
    const double half = 0.5 * m.bin_kwh;
    const double first = std::ceil((floor_kwh + half) / m.bin_kwh - 1e-9) * m.bin_kwh;
    for (double b = first; b <= required_kwh + 1e-9; b += m.bin_kwh) {
        // Everything below the first upper edge, clipped trips included, lands in the first bin.
        const double at_least_lower = b == first ? 1.0 : p_soc_at_least(b - half);
        h.soc.push_back(b);
        h.frequency.push_back(std::max(at_least_lower - p_soc_at_least(b + half), 0.0));
    }
    const double total = std::accumulate(h.frequency.begin(), h.frequency.end(), 0.0);
    for (double& f : h.frequency) f /= total;
    return h;
}

double sample_arrival_soc(const ArrivalHistogram& hist, std::mt19937_64& rng) {
    std::discrete_distribution<std::size_t> pick(hist.frequency.begin(), hist.frequency.end());
    return hist.soc[pick(rng)];
}

double sample_arrival_soc(const ArrivalHistogram& hist, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_arrival_soc(hist, rng);
}

ArrivalHistogram read_histogram(const std::string& path) {
    const auto t = text::read_table_file(path);
    const auto cs = t.column("soc_bin_kWh");
    const auto cf = t.column("relative_frequency");
    ArrivalHistogram h;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        h.soc.push_back(t.number(r, cs));
        h.frequency.push_back(t.number(r, cf));
    }
    h.validate();
    return h;
}

void write_histogram(const std::string& path, const ArrivalHistogram& hist) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    text::write_row(out, {"soc_bin_kWh", "relative_frequency"});
    for (std::size_t i = 0; i < hist.soc.size(); ++i) {
        text::write_row(out, {text::exact(hist.soc[i]), text::exact(hist.frequency[i])});
    }
}

void Scenario::validate() const {
    grid.validate();
    const double per_day = 24.0 / grid.step_hours;
    if (std::abs(per_day - std::round(per_day)) > 1e-9) throw std::invalid_argument("step must divide a day");
    if (grid.length != static_cast<int>(std::round(per_day))) {
        throw std::invalid_argument("the schedule must cover exactly one day");
    }
    if (decision_lead < 1 || decision_lead + 1 > grid.length) {
        throw std::invalid_argument("decision lead must leave room for the stage-2 horizon");
    }
    if (simulation.horizon < 0 || simulation.horizon >= decision_lead) {
        throw std::invalid_argument("stage-2 horizon must be shorter than the decision lead");
    }
    ess.validate(grid.step_hours);
    costs.validate();
    arrival_soc.validate();
    arrival_soc.check_support(pev.e_min, pev.e_max);
    if (pev.required_soc < pev.e_min || pev.required_soc > pev.e_max) {
        throw std::invalid_argument("vehicle request outside its energy limits");
    }
    for (const auto& slot : fleet) {
        if (slot.arrival_hour < 1 || slot.departure_hour <= slot.arrival_hour ||
            slot.departure_hour > grid.length) {
            throw std::invalid_argument("fleet slot '" + slot.id + "' must arrive after midnight and leave the same day");
        }
        const double reach = pev.p_max * pev.efficiency().charge * grid.step_hours *
                             static_cast<double>(slot.departure_hour - slot.arrival_hour);
        if (arrival_soc.soc.front() + reach < pev.required_soc - kLimitTolerance) {
            throw std::invalid_argument("fleet slot '" + slot.id + "' cannot reach its request from the lowest arrival SOC");
        }
    }
    if (reliability_levels.empty()) throw std::invalid_argument("at least one reliability level is required");
    for (double r : reliability_levels) {
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("reliability levels must lie in (0, 1)");
    }
    if (forecasts.source != "synthetic" && forecasts.source != "files") {
        throw std::invalid_argument("forecast source must be 'synthetic' or 'files'");
    }
    if (forecasts.ensemble_size < 10) throw std::invalid_argument("ensemble needs at least 10 members");
    if (simulation.days_per_week < 1 || simulation.week_start_doy.empty()) {
        throw std::invalid_argument("simulation needs at least one day");
    }
}

Scenario default_scenario() {
    Scenario s;
    s.grid.step_hours = 1.0;
    s.grid.length = 24;
    s.grid.extension = 12;
    s.grid.begin = 12;
    s.grid.decision_step = 0;
    s.arrival_soc = commute_histogram(s.commute, s.pev.e_max, s.pev.required_soc, s.pev.e_min);
    s.ess.soc = s.ess.e_min + s.simulation.initial_soc_fraction * (s.ess.e_max - s.ess.e_min);
    return s;
}

namespace {

template <typename T>
void read(const YAML::Node& n, const char* key, T& out) {
    if (n && n[key]) out = n[key].as<T>();
}

void read_device(const YAML::Node& n, StorageDevice& d) {
    if (!n) return;
    read(n, "p_min_kw", d.p_min);
    read(n, "p_max_kw", d.p_max);
    read(n, "e_min_kwh", d.e_min);
    read(n, "e_max_kwh", d.e_max);
    read(n, "loss", d.loss);
    read(n, "required_soc_kwh", d.required_soc);
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).string();
}

}  // namespace

Scenario load_scenario(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw std::runtime_error("cannot parse scenario " + path + ": " + e.what());
    }
    const auto base = std::filesystem::path(path).parent_path();
    Scenario s = default_scenario();

    try {
        if (const auto g = root["grid"]) {
            read(g, "step_hours", s.grid.step_hours);
            read(g, "schedule_steps", s.grid.length);
            read(g, "extension_steps", s.grid.extension);
            read(g, "decision_lead_steps", s.decision_lead);
        }
        read_device(root["ess"], s.ess);
        read_device(root["pev"], s.pev);
        if (const auto f = root["fleet"]) {
            s.fleet.clear();
            for (const auto& v : f) {
                s.fleet.push_back({v["id"].as<std::string>(), v["arrival_hour"].as<int>(), v["departure_hour"].as<int>()});
            }
        }
        if (const auto c = root["costs"]) {
            if (c["quadratic"]) {
                const auto q = c["quadratic"].as<std::vector<double>>();
                if (q.size() != 4) throw std::invalid_argument("costs.quadratic needs four entries (row major)");
                Eigen::Matrix2d m;
                m << q[0], q[1], q[2], q[3];
                s.costs.quadratic = {m};
            }
            if (c["linear"]) {
                const auto l = c["linear"].as<std::vector<double>>();
                if (l.size() != 2) throw std::invalid_argument("costs.linear needs two entries");
                s.costs.linear = {Eigen::Vector2d(l[0], l[1])};
            }
            read(c, "incremental", s.costs.incremental);
            read(c, "alpha_eps", s.costs.alpha_eps);
            read(c, "alpha_sigma", s.costs.alpha_sigma);
            read(c, "overcharge", s.costs.overcharge);
        }
        if (const auto f = root["forecasts"]) {
            read(f, "source", s.forecasts.source);
            std::string p;
            read(f, "trace", p);
            s.forecasts.trace_path = resolve(base, p);
            p.clear();
            read(f, "quantiles", p);
            s.forecasts.quantile_path = resolve(base, p);
            read(f, "levels", s.forecasts.levels);
            read(f, "coverage", s.forecasts.coverage);
            read(f, "grid_step_kwh", s.forecasts.grid_step);
            read(f, "ensemble_size", s.forecasts.ensemble_size);
        }
        if (const auto p = root["pv"]) {
            read(p, "capacity_kw", s.pv.capacity_kw);
            read(p, "day_to_day_correlation", s.pv.day_to_day_correlation);
            read(p, "hourly_correlation", s.pv.hourly_correlation);
            read(p, "spread_base", s.pv.spread_base);
            read(p, "spread_peak", s.pv.spread_peak);
        }
        if (const auto a = root["arrival_soc"]) {
            std::string p;
            read(a, "histogram", p);
            s.histogram_path = resolve(base, p);
            read(a, "median_km", s.commute.median_km);
            read(a, "sigma", s.commute.sigma);
            read(a, "autonomy_km", s.commute.autonomy_km);
            read(a, "bin_kwh", s.commute.bin_kwh);
        }
        if (const auto r = root["reliability"]) {
            read(r, "levels", s.reliability_levels);
            read(r, "nu", s.nu);
        }
        if (const auto m = root["simulation"]) {
            read(m, "week_start_doy", s.simulation.week_start_doy);
            read(m, "days_per_week", s.simulation.days_per_week);
            read(m, "horizon", s.simulation.horizon);
            read(m, "seed", s.simulation.seed);
            read(m, "deterministic", s.simulation.deterministic);
            read(m, "initial_soc_fraction", s.simulation.initial_soc_fraction);
            read(m, "gamma", s.simulation.gamma);
            std::string rule;
            read(m, "departure_bound", rule);
            if (rule == "required_on_top") {
                s.simulation.departure_rule = DepartureBound::RequiredOnTop;
            } else if (!rule.empty() && rule != "net_of_arrival_floor") {
                throw std::invalid_argument("unknown departure_bound '" + rule + "'");
            }
        }
    } catch (const YAML::Exception& e) {
        throw std::runtime_error("scenario " + path + ": " + e.what());
    }

    s.grid.begin = s.decision_lead;
    s.grid.decision_step = 0;
    s.pev.kind = DeviceKind::Pev;
    s.ess.soc = s.ess.e_min + s.simulation.initial_soc_fraction * (s.ess.e_max - s.ess.e_min);
    s.arrival_soc = s.histogram_path.empty()
                        ? commute_histogram(s.commute, s.pev.e_max, s.pev.required_soc, s.pev.e_min)
                        : read_histogram(s.histogram_path);
    s.validate();
    return s;
}

}  // namespace dcs
