#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcs/metrics.hpp"
#include "dcs/operation.hpp"
#include "dcs/scenario.hpp"
#include "dcs/scheduler.hpp"
#include "dcs/simulation.hpp"
#include "dcs/text_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string scenario;
    std::vector<double> epsilon;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
    double gamma = -1.0;
};

dcs::Scenario load(const Common& c) {
    dcs::Scenario s = c.scenario.empty() ? dcs::default_scenario() : dcs::load_scenario(c.scenario);
    if (!c.epsilon.empty()) {
        s.reliability_levels.clear();
        for (double e : c.epsilon) s.reliability_levels.push_back(1.0 - e);
    }
    if (c.seed_set) s.simulation.seed = c.seed;
    if (c.gamma >= 0.0) s.simulation.gamma = c.gamma;
    s.validate();
    return s;
}

std::string tag(double reliability) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", reliability);
    return buf;
}

std::ofstream open_out(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    std::ofstream os(fs::path(c.out) / name);
    if (!os) throw std::runtime_error("cannot write " + (fs::path(c.out) / name).string());
    return os;
}

void print_levels(const std::vector<dcs::LevelSummary>& levels) {
    std::printf("%-6s %5s %5s %8s %10s %9s %9s %9s %8s %8s %6s\n", "1-eps", "days", "inv", "R^gamma", "balance",
                "DiS_eur", "sigma_eur", "total", "ramp_l'", "ramp_g", "missed");
    for (const auto& l : levels) {
        std::printf("%-6.2f %5d %5d %8.4f %10.3f %9.3f %9.3f %9.3f %8.3f %8.3f %6d\n", l.reliability, l.days,
                    l.invalid_days, l.tracking, l.balancing_energy, l.schedule_cost, l.imbalance_cost, l.total_cost,
                    l.ramp_baseline, l.ramp_grid, l.missed_departures);
    }
}

int cmd_schedule(const Common& c, int week_doy, int day) {
    const auto s = load(c);
    const int days = std::max(s.simulation.days_per_week, day + 1);
    auto source = dcs::make_source(s, week_doy, days, s.simulation.seed);
    std::mt19937_64 rng(s.simulation.seed);
    std::vector<double> socs;
    for (std::size_t i = 0; i < s.fleet.size(); ++i) socs.push_back(dcs::sample_arrival_soc(s.arrival_soc, rng));
    const double e0 = s.ess.e_min + s.simulation.initial_soc_fraction * (s.ess.e_max - s.ess.e_min);
    for (double r : s.reliability_levels) {
        const auto prob = dcs::make_schedule_problem(s, *source, day, dcs::day_fleet(s, day, socs), e0, {}, r);
        const auto dis = dcs::solve_dispatch(prob, s.costs);
        auto os = open_out(c, "schedule_" + tag(r) + ".csv");
        dcs::write_schedule(os, dis);
        std::printf("1-eps=%.2f objective=%.6f committed_cost=%.4f slack=%.3g solve=%.3fs\n", r, dis.objective,
                    dis.committed_cost(s.costs, prob.previous_grid), dis.total_slack(), dis.diagnostics.seconds);
    }
    return 0;
}

int cmd_simulate(const Common& c, std::vector<int> weeks, bool deterministic, bool logs) {
    auto s = load(c);
    if (!weeks.empty()) s.simulation.week_start_doy = weeks;
    if (deterministic) s.simulation.deterministic = true;
    const auto t0 = std::chrono::steady_clock::now();
    const auto runs = dcs::run_matrix(s, s.reliability_levels, s.simulation.seed, [&](const dcs::WeekRun& w) {
        std::fprintf(stderr, "week %d at 1-eps=%.2f done\n", w.start_doy, w.reliability);
        if (!logs) return;
        auto os = open_out(c, "log_" + std::to_string(w.start_doy) + "_" + tag(w.reliability) + ".csv");
        dcs::write_operation_log(os, w.log);
    });
    const auto rep = dcs::report(runs);
    {
        auto os = open_out(c, "days.csv");
        dcs::write_day_metrics(os, rep.days);
    }
    {
        auto os = open_out(c, "summary.csv");
        dcs::write_level_summary(os, rep.levels);
    }
    for (const auto& w : runs) {
        for (const auto& d : w.days) {
            if (!d.failure.empty()) {
                std::fprintf(stderr, "week %d day %d 1-eps=%.2f: stage 1 failed: %s\n", w.start_doy, d.metrics.day,
                             w.reliability, d.failure.c_str());
            }
        }
    }
    print_levels(rep.levels);
    std::printf("elapsed %.1f s\n", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& logs, int day_steps, double step_hours) {
    const double gamma = c.gamma >= 0.0 ? c.gamma : 1e-4;
    auto os = open_out(c, "report.csv");
    dcs::text::write_row(os, {"log", "day", "tracking", "balancing_kwh", "ramp_baseline_kw", "ramp_grid_kw"});
    for (const auto& path : logs) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot read " + path);
        const auto series = dcs::read_operation_log(is);
        const std::size_t n = series.step.size();
        for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(day_steps)) {
            const std::size_t e = std::min(n, b + static_cast<std::size_t>(day_steps));
            auto cut = [&](const std::vector<double>& v) { return std::vector<double>(v.begin() + b, v.begin() + e); };
            const auto g = cut(series.grid);
            const auto gs = cut(series.scheduled);
            const auto lb = cut(series.baseline);
            const auto day = std::to_string(series.step[b] / day_steps);
            const double r = dcs::tracking_ratio(g, gs, gamma);
            const double be = dcs::balancing_energy(g, gs, step_hours);
            dcs::text::write_row(os, {path, day, dcs::text::exact(r), dcs::text::exact(be),
                                      dcs::text::exact(dcs::max_step_change(lb)),
                                      dcs::text::exact(dcs::max_step_change(g))});
            std::printf("%s day %s: R^gamma=%.4f balancing=%.3f kWh\n", path.c_str(), day.c_str(), r, be);
        }
    }
    return 0;
}

int cmd_validate(const Common& c, std::vector<int> weeks, int draws) {
    auto s = load(c);
    if (!weeks.empty()) s.simulation.week_start_doy = weeks;
    const auto runs = dcs::run_matrix(s, s.reliability_levels, s.simulation.seed);
    auto os = open_out(c, "audit.csv");
    dcs::text::write_row(os, {"week_start_doy", "day", "reliability", "soc_point", "probability", "generator"});
    int failures = 0;
    for (double r : s.reliability_levels) {
        int audited = 0;
        int skipped = 0;
        double worst = 1.0;
        double worst_generator = 1.0;
        for (const auto& w : runs) {
            if (w.reliability != r) continue;
            for (const auto& d : w.days) {
                if (!d.failure.empty() || d.schedule.total_slack() > 1e-9) {
                    ++skipped;
                    continue;
                }
                const auto a = dcs::audit_chance_constraints(d.problem, d.schedule, draws,
                                                             s.simulation.seed + static_cast<std::uint64_t>(audited),
                                                             w.source.get());
                ++audited;
                worst = std::min(worst, a.worst());
                for (std::size_t j = 0; j < a.probability.size(); ++j) {
                    const double gen = a.generator.empty() ? -1.0 : a.generator[j];
                    if (!a.generator.empty()) worst_generator = std::min(worst_generator, gen);
                    dcs::text::write_row(os, {std::to_string(w.start_doy), std::to_string(d.metrics.day),
                                              dcs::text::exact(r), std::to_string(j + 1),
                                              dcs::text::exact(a.probability[j]), dcs::text::exact(gen)});
                }
                if (a.worst() < r - 0.02) ++failures;
            }
        }
        std::printf("1-eps=%.2f audited=%d skipped=%d worst=%.4f generator_worst=%.4f %s\n", r, audited, skipped,
                    worst, worst_generator, worst >= r - 0.02 ? "PASS" : "FAIL");
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dispatchable charging station scheduler and simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    Common c;
    app.add_option("--scenario", c.scenario, "Scenario YAML (defaults to the built-in parking lot)");
    app.add_option("--epsilon", c.epsilon, "Risk levels eps; each runs at reliability 1-eps")->delimiter(',');
    auto* seed = app.add_option("--seed", c.seed, "Random seed");
    app.add_option("--out", c.out, "Output directory");
    app.add_option("--gamma", c.gamma, "Tracking tolerance (kW)");

    int week_doy = 288;
    int day = 0;
    auto* sch = app.add_subcommand("schedule", "Solve one day-ahead dispatch schedule");
    sch->add_option("--week", week_doy, "Day of year the week starts on");
    sch->add_option("--day", day, "Day index within the week");

    std::vector<int> weeks;
    bool deterministic = false;
    bool logs = true;
    auto* sim = app.add_subcommand("simulate", "Run the closed loop over the test weeks");
    sim->add_option("--weeks", weeks, "Week start days of year")->delimiter(',');
    sim->add_flag("--deterministic", deterministic, "Point-mass forecasts and known arrival SOCs");
    sim->add_flag("!--no-logs", logs, "Skip the per-step operation logs");

    std::vector<std::string> log_files;
    int day_steps = 24;
    double step_hours = 1.0;
    auto* rep = app.add_subcommand("report", "Metrics from operation logs");
    rep->add_option("logs", log_files, "Operation log files")->required();
    rep->add_option("--day-steps", day_steps, "Steps per day");
    rep->add_option("--step-hours", step_hours, "Step duration (h)");

    int draws = 1000;
    auto* val = app.add_subcommand("validate", "Monte Carlo audit of the chance constraints");
    val->add_option("--weeks", weeks, "Week start days of year")->delimiter(',');
    val->add_option("--draws", draws, "Draws per schedule");

    CLI11_PARSE(app, argc, argv);
    c.seed_set = seed->count() > 0;
    try {
        if (*sch) return cmd_schedule(c, week_doy, day);
        if (*sim) return cmd_simulate(c, weeks, deterministic, logs);
        if (*rep) return cmd_report(c, log_files, day_steps, step_hours);
        if (*val) return cmd_validate(c, weeks, draws);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
