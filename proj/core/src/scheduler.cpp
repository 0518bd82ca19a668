#include "dcs/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "dcs/qp.hpp"
#include "dcs/text_io.hpp"

namespace dcs {

const Eigen::Matrix2d& CostModel::C(std::size_t offset) const { return quadratic.at(offset % quadratic.size()); }

const Eigen::Vector2d& CostModel::c(std::size_t offset) const { return linear.at(offset % linear.size()); }

void CostModel::validate() const {
    if (quadratic.empty() || linear.empty()) throw std::invalid_argument("cost model needs coefficients");
    for (const auto& m : quadratic) {
        const Eigen::Matrix2d sym = 0.5 * (m + m.transpose());
        if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(sym).eigenvalues().minCoeff() < -1e-12) {
            throw std::invalid_argument("quadratic cost matrix is not positive semidefinite");
        }
    }
    if (incremental < 0.0) throw std::invalid_argument("incremental weight must be nonnegative");
    if (!(alpha_eps > 0.0) || !(alpha_sigma > 0.0)) throw std::invalid_argument("slack weights must be positive");
    if (overcharge < 0.0) throw std::invalid_argument("overcharge weight must be nonnegative");
}

double evaluate_cost(const PowerFlow& g_now, const PowerFlow& g_prev, const CostModel& cm, std::size_t offset) {
    const Eigen::Vector2d g(g_now.fwd, g_now.rev);
    const Eigen::Vector2d d(g_now.fwd - g_prev.fwd, g_now.rev - g_prev.rev);
    return g.dot(cm.C(offset) * g) + cm.c(offset).dot(g) + cm.incremental * d.squaredNorm();
}

double chance_constraint_residual(double e_hat, double e_lo, double e_hi, const EmpiricalDistribution& F,
                                  double level) {
    if (e_lo > e_hi) throw std::invalid_argument("energy limits are inverted");
    return F.cdf(e_hat - e_hi) - F.cdf(e_hat - e_lo) + level;
}

double terminal_ramp_bound(double excess, int last_departure, int horizon_end) {
    if (horizon_end <= last_departure) throw std::invalid_argument("last departure must precede the horizon end");
    return excess / static_cast<double>(horizon_end - last_departure);
}

std::vector<RampViolation> check_terminal_ramp(std::span<const double> e_hat, int begin, int last_departure,
                                               double bound, bool has_ess, double tol) {
    std::vector<RampViolation> out;
    const int first = std::max(last_departure - begin, 0);
    for (int i = first; i + 1 < static_cast<int>(e_hat.size()); ++i) {
        const double drop = e_hat[static_cast<std::size_t>(i)] - e_hat[static_cast<std::size_t>(i) + 1];
        const double excess = has_ess ? drop - bound : drop;
        if (excess > tol) out.push_back({begin + i, excess});
    }
    return out;
}

void ScheduleProblem::validate() const {
    grid.validate();
    ess.validate(grid.step_hours);
    forecast.validate();
    const auto n = static_cast<std::size_t>(grid.extended_steps());
    if (forecast.begin != grid.begin || forecast.steps() != n) {
        throw std::invalid_argument("forecast bundle must cover the extended window");
    }
    if (arrival_soc.size() != fleet.size()) {
        throw std::invalid_argument("every vehicle needs an arrival SOC distribution");
    }
    for (const auto& d : arrival_soc) d.validate();
    for (const auto& v : fleet.vehicles()) {
        if (v.departure > grid.extended_end()) {
            throw std::invalid_argument("vehicle '" + v.id + "' departs after the extended window");
        }
    }
    if (!(reliability > 0.0 && reliability < 1.0)) throw std::invalid_argument("reliability level must be in (0, 1)");
    if (nu < 0.0) throw std::invalid_argument("bilinear cap must be nonnegative");
    if (!previous_grid.valid()) throw std::invalid_argument("previous exchange violates the sign convention");
}

const PowerFlow& DispatchSchedule::at(int k) const {
    if (k < begin || k >= end()) throw std::out_of_range("step " + std::to_string(k) + " outside the schedule");
    return grid[static_cast<std::size_t>(k - begin)];
}

double DispatchSchedule::total_slack() const noexcept { return std::accumulate(slack.begin(), slack.end(), 0.0); }

double DispatchSchedule::committed_cost(const CostModel& cm, const PowerFlow& previous) const {
    double total = 0.0;
    PowerFlow prev = previous;
    for (int i = 0; i < length && i < static_cast<int>(grid.size()); ++i) {
        total += evaluate_cost(grid[static_cast<std::size_t>(i)], prev, cm, static_cast<std::size_t>(i));
        prev = grid[static_cast<std::size_t>(i)];
    }
    return total;
}

double ReliabilityProfile::probability(double e_hat) const noexcept {
    if (degenerate()) {
        const double v = deviation.lo();
        return e_hat >= e_lo + v - kPointTolerance && e_hat <= e_hi + v + kPointTolerance ? 1.0 : 0.0;
    }
    return deviation.cdf(e_hat - e_lo) - deviation.cdf(e_hat - e_hi);
}

std::pair<double, double> ReliabilityProfile::slopes(double e_hat) const noexcept {
    if (degenerate()) return {0.0, 0.0};
    const double d = 1e-7 * deviation.step();
    const double p = probability(e_hat);
    return {(p - probability(e_hat - d)) / d, (probability(e_hat + d) - p) / d};
}

ReliabilityInterval ReliabilityProfile::interval(double level) const {
    if (degenerate()) {
        const double v = deviation.lo();
        return {e_lo + v, e_hi + v, 0.5 * (e_lo + e_hi) + v, true};
    }
    const double h = deviation.step();
    const double first_knot = deviation.lo() - 0.5 * h;
    std::vector<double> pts;
    pts.reserve(2 * (deviation.size() + 1));
    for (std::size_t t = 0; t <= deviation.size(); ++t) {
        const double knot = first_knot + static_cast<double>(t) * h;
        pts.push_back(e_lo + knot);
        pts.push_back(e_hi + knot);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<double> p(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) p[i] = probability(pts[i]);

    const auto m = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (p[m] < level) return {pts[m], pts[m], pts[m], false};

    auto crossing = [&](std::size_t below, std::size_t above) {
        const double t = (level - p[below]) / (p[above] - p[below]);
        return pts[below] + t * (pts[above] - pts[below]);
    };
    double lo = pts.front();
    for (std::size_t i = m; i > 0; --i) {
        if (p[i - 1] < level) {
            lo = crossing(i - 1, i);
            break;
        }
    }
    double hi = pts.back();
    for (std::size_t i = m; i + 1 < pts.size(); ++i) {
        if (p[i + 1] < level) {
            hi = crossing(i + 1, i);
            break;
        }
    }
    return {lo, hi, pts[m], true};
}

TimeVaryingBattery schedule_battery(const ScheduleProblem& prob) {
    std::vector<double> means;
    means.reserve(prob.arrival_soc.size());
    for (const auto& d : prob.arrival_soc) means.push_back(d.mean());
    return build_time_varying_battery(prob.fleet, prob.ess, prob.grid.begin, prob.grid.extended_steps(), means,
                                      prob.departure_rule);
}

std::vector<ReliabilityProfile> reliability_profiles(const ScheduleProblem& prob, const TimeVaryingBattery& tvb) {
    const int begin = prob.grid.begin;
    const auto pevs = prob.fleet.vehicles();
    std::vector<ReliabilityProfile> out;
    out.reserve(static_cast<std::size_t>(tvb.steps) + 1);
    for (int k = begin; k <= begin + tvb.steps; ++k) {
        std::vector<EmpiricalDistribution> arrivals;
        double expected_jumps = 0.0;
        for (std::size_t i : prob.fleet.arrived(k)) {
            if (pevs[i].arrival <= begin) continue;
            arrivals.push_back(prob.arrival_soc[i]);
            expected_jumps += prob.arrival_soc[i].mean();
        }
        ReliabilityProfile rp;
        rp.deviation = energy_deviation_distribution(prob.forecast, k, arrivals).shifted(-expected_jumps).mirrored();
        rp.e_lo = tvb.energy_min(k);
        rp.e_hi = tvb.energy_max(k);
        out.push_back(std::move(rp));
    }
    return out;
}

namespace {

constexpr double kMinSlope = 1e-3;

// How the chance constraint of one SOC point enters the QP: the hinge pair
// around its superlevel interval, or a linearization of the residual.
struct ChanceRow {
    bool linearized = false;
    double a = 0.0, b = 0.0;    // interval
    double ra = 0.0, rb = 0.0;  // residual at the interval ends
    double sl = 0.0, sr = 0.0;  // hinge slopes
    double r0 = 0.0, s0 = 0.0, e0 = 0.0;
};

struct Formulation {
    std::vector<ChanceRow> rows;  // per SOC point, entry 0 unused
    std::vector<double> center;   // trust-region center, empty when inactive
    double radius = 0.0;
    double rho = 0.0;             // bilinear penalty
    std::vector<std::pair<double, double>> anchor;  // linearization point of the concave part
};

struct Layout {
    int n = 0;
    std::vector<int> gf, gr, pf, pr, e, eps;
    int excess = -1;
};

struct Iterate {
    std::vector<PowerFlow> grid, storage;
    std::vector<double> soc;
    double cost = 0.0;
    double merit = 0.0;
    std::vector<double> residual;
    qp::Solution qp;
};

class DispatchSolver {
public:
    DispatchSolver(const ScheduleProblem& prob, const CostModel& cm)
        : prob_(prob), cm_(cm), tvb_(schedule_battery(prob)), profiles_(reliability_profiles(prob, tvb_)) {
        n_ = prob.grid.extended_steps();
        mu_ = EfficiencyVector::from_loss(prob.ess.loss);
        dt_ = prob.grid.step_hours;
        level_ = prob.reliability;
    }

    DispatchSchedule run();

private:
    void check_robust_bounds() const;
    [[nodiscard]] Formulation interval_formulation() const;
    [[nodiscard]] Iterate solve(const Formulation& f, int& qp_iterations) const;
    void evaluate(Iterate& it) const;
    [[nodiscard]] double linear_violation(const Iterate& it) const;

    const ScheduleProblem& prob_;
    const CostModel& cm_;
    TimeVaryingBattery tvb_;
    std::vector<ReliabilityProfile> profiles_;
    int n_ = 0;
    EfficiencyVector mu_;
    double dt_ = 1.0;
    double level_ = 0.0;
};

void DispatchSolver::check_robust_bounds() const {
    for (int i = 0; i < n_; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double lo = prob_.forecast.upper[u] + tvb_.p_min[u];
        const double hi = prob_.forecast.lower[u] + tvb_.p_max[u];
        if (lo > hi + 1e-9) {
            const int k = prob_.grid.begin + i;
            throw InfeasibleSchedule(k, "robust power bounds leave no admissible exchange at step " + std::to_string(k));
        }
    }
}

Formulation DispatchSolver::interval_formulation() const {
    Formulation f;
    f.rows.resize(static_cast<std::size_t>(n_) + 1);
    for (int j = 1; j <= n_; ++j) {
        const auto& prof = profiles_[static_cast<std::size_t>(j)];
        const auto iv = prof.interval(level_);
        auto& row = f.rows[static_cast<std::size_t>(j)];
        row.a = iv.lo;
        row.b = iv.hi;
        row.ra = level_ - prof.probability(iv.lo);
        row.rb = level_ - prof.probability(iv.hi);
        if (iv.feasible) {
            row.ra = std::min(row.ra, 0.0);
            row.rb = std::min(row.rb, 0.0);
        }
        if (prof.degenerate()) {
            // Hard interval: as steep as a one-cell smoothed step.
            row.sl = row.sr = 1.0 / prof.deviation.step();
            continue;
        }
        row.sl = std::max(prof.slopes(iv.lo).first, kMinSlope);
        row.sr = std::max(-prof.slopes(iv.hi).second, kMinSlope);
    }
    return f;
}

Iterate DispatchSolver::solve(const Formulation& f, int& qp_iterations) const {
    qp::Problem qp;
    Layout L;
    L.n = n_;
    const auto n = static_cast<std::size_t>(n_);
    for (std::size_t i = 0; i < n; ++i) {
        L.gf.push_back(qp.add_variable(0.0, qp::kInf));
        L.gr.push_back(qp.add_variable(-qp::kInf, 0.0));
        L.pf.push_back(qp.add_variable(0.0, std::max(tvb_.p_max[i], 0.0)));
        L.pr.push_back(qp.add_variable(std::min(tvb_.p_min[i], 0.0), 0.0));
    }
    for (std::size_t j = 0; j <= n; ++j) {
        if (j == 0) {
            L.e.push_back(qp.add_variable(prob_.initial_soc, prob_.initial_soc));
        } else if (!f.center.empty()) {
            L.e.push_back(qp.add_variable(f.center[j] - f.radius, f.center[j] + f.radius));
        } else {
            L.e.push_back(qp.add_variable());
        }
        L.eps.push_back(j == 0 ? -1 : qp.add_variable(0.0, qp::kInf));
    }

    PowerFlow prev = prob_.previous_grid;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& C = cm_.C(i);
        const auto& c = cm_.c(i);
        qp.add_product(L.gf[i], L.gf[i], C(0, 0));
        qp.add_product(L.gr[i], L.gr[i], C(1, 1));
        qp.add_product(L.gf[i], L.gr[i], C(0, 1) + C(1, 0));
        qp.add_linear(L.gf[i], c(0));
        qp.add_linear(L.gr[i], c(1));
        if (i == 0) {
            qp.add_squared({{L.gf[0], 1.0}}, -prev.fwd, cm_.incremental);
            qp.add_squared({{L.gr[0], 1.0}}, -prev.rev, cm_.incremental);
        } else {
            qp.add_squared({{L.gf[i], 1.0}, {L.gf[i - 1], -1.0}}, 0.0, cm_.incremental);
            qp.add_squared({{L.gr[i], 1.0}, {L.gr[i - 1], -1.0}}, 0.0, cm_.incremental);
        }
        if (f.rho > 0.0) {
            // ρ·fwd·|rev| = ¼ρ(f − r)² − ¼ρ(f + r)², concave part linearized.
            const auto [f0, r0] = f.anchor[i];
            qp.add_squared({{L.pf[i], 1.0}, {L.pr[i], -1.0}}, 0.0, 0.25 * f.rho);
            const double s = f0 + r0;
            qp.add_linear(L.pf[i], -0.5 * f.rho * s);
            qp.add_linear(L.pr[i], -0.5 * f.rho * s);
            qp.add_constant(0.25 * f.rho * s * s);
        }

        qp.add_equality({{L.pf[i], 1.0}, {L.pr[i], 1.0}, {L.gf[i], -1.0}, {L.gr[i], -1.0}},
                        -prob_.forecast.expected[i]);
        qp.add_equality({{L.e[i + 1], 1.0}, {L.e[i], -1.0}, {L.pf[i], -mu_.charge * dt_}, {L.pr[i], -mu_.discharge * dt_}},
                        tvb_.arrival_energy[i + 1]);
        qp.add_less_equal({{L.gf[i], 1.0}, {L.gr[i], 1.0}}, prob_.forecast.lower[i] + tvb_.p_max[i]);
        qp.add_greater_equal({{L.gf[i], 1.0}, {L.gr[i], 1.0}}, prob_.forecast.upper[i] + tvb_.p_min[i]);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        qp.add_less_equal({{L.e[j], 1.0}}, tvb_.pre_max[j] + tvb_.arrival_energy[j]);
        qp.add_greater_equal({{L.e[j], 1.0}}, tvb_.pre_min[j] + tvb_.arrival_energy[j]);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const auto& row = f.rows[j];
        qp.add_linear(L.eps[j], cm_.alpha_eps);
        const int e = L.e[j];
        const int s = L.eps[j];
        if (row.linearized) {
            // ϵ ≥ r0 + s0 (ê − ê0)
            qp.add_greater_equal({{s, 1.0}, {e, -row.s0}}, row.r0 - row.s0 * row.e0);
        } else {
            qp.add_greater_equal({{s, 1.0}, {e, row.sl}}, row.ra + row.sl * row.a);
            qp.add_greater_equal({{s, 1.0}, {e, -row.sr}}, row.rb - row.sr * row.b);
        }
    }

    const int last = prob_.fleet.last_departure();
    const int begin = prob_.grid.begin;
    if (last >= begin && last < begin + n_) {
        const auto d = static_cast<std::size_t>(last - begin);
        const double steps = static_cast<double>(begin + n_ - last);
        if (prob_.has_ess()) {
            L.excess = qp.add_variable(-qp::kInf, prob_.ess.e_max - prob_.ess.e_min);
            qp.add_less_equal({{L.excess, 1.0}, {L.e[d], -1.0}}, -tvb_.e_min[d]);
            for (std::size_t i = d; i < n; ++i) {
                qp.add_less_equal({{L.e[i], 1.0}, {L.e[i + 1], -1.0}, {L.excess, -1.0 / steps}}, 0.0);
            }
        } else {
            for (std::size_t i = d; i < n; ++i) qp.add_greater_equal({{L.e[i + 1], 1.0}, {L.e[i], -1.0}}, 0.0);
        }
    }

    Iterate it;
    it.qp = qp::solve(qp);
    qp_iterations += it.qp.iterations;
    if (!it.qp.ok()) return it;
    const auto& x = it.qp.x;
    for (std::size_t i = 0; i < n; ++i) {
        it.grid.push_back({std::max(x[L.gf[i]], 0.0), std::min(x[L.gr[i]], 0.0)});
        it.storage.push_back({std::max(x[L.pf[i]], 0.0), std::min(x[L.pr[i]], 0.0)});
    }
    for (std::size_t j = 0; j <= n; ++j) it.soc.push_back(x[L.e[j]]);
    evaluate(it);
    return it;
}

void DispatchSolver::evaluate(Iterate& it) const {
    const auto n = static_cast<std::size_t>(n_);
    it.cost = 0.0;
    PowerFlow prev = prob_.previous_grid;
    for (std::size_t i = 0; i < n; ++i) {
        it.cost += evaluate_cost(it.grid[i], prev, cm_, i);
        prev = it.grid[i];
    }
    it.residual.assign(n + 1, 0.0);
    double slack = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        it.residual[j] = level_ - profiles_[j].probability(it.soc[j]);
        slack += std::max(it.residual[j], 0.0);
    }
    it.merit = it.cost + cm_.alpha_eps * slack;
}

double DispatchSolver::linear_violation(const Iterate& it) const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double g = it.grid[u].net();
        const double p = it.storage[u].net();
        worst = std::max(worst, std::abs(p - g + prob_.forecast.expected[u]));
        const double e_next = it.soc[u] + mu_.apply(it.storage[u]) * dt_ + tvb_.arrival_energy[u + 1];
        worst = std::max(worst, std::abs(e_next - it.soc[u + 1]));
        worst = std::max(worst, g - (prob_.forecast.lower[u] + tvb_.p_max[u]));
        worst = std::max(worst, prob_.forecast.upper[u] + tvb_.p_min[u] - g);
    }
    return worst;
}

DispatchSchedule DispatchSolver::run() {
    const auto t0 = std::chrono::steady_clock::now();
    check_robust_bounds();
    SolverDiagnostics diag;
    int qp_iterations = 0;

    Formulation form = interval_formulation();
    Iterate best = solve(form, qp_iterations);
    diag.outer_iterations = 1;
    if (!best.qp.ok()) {
        diag.qp_iterations = qp_iterations;
        throw SolverFailure("stage-1 QP failed: " + qp::to_string(best.qp.status), diag);
    }

    // Sequential convexification for points the interval hinge leaves short.
    auto violating = [&](const Iterate& it) {
        return std::any_of(it.residual.begin() + 1, it.residual.end(), [](double r) { return r > 1e-9; });
    };
    if (violating(best)) {
        double radius = 2.0;
        for (int outer = 0; outer < 50 && radius > 1e-4; ++outer) {
            Formulation f = form;
            f.center = best.soc;
            f.radius = radius;
            for (std::size_t j = 1; j < f.rows.size(); ++j) {
                if (best.residual[j] <= 1e-9) continue;
                auto& row = f.rows[j];
                const auto& prof = profiles_[j];
                const auto [left, right] = prof.slopes(best.soc[j]);
                const double toward_peak = best.soc[j] < prof.interval(level_).peak ? right : left;
                row.linearized = true;
                row.r0 = best.residual[j];
                row.e0 = best.soc[j];
                row.s0 = -toward_peak;
            }
            Iterate trial = solve(f, qp_iterations);
            ++diag.outer_iterations;
            if (trial.qp.ok() && trial.merit < best.merit - 1e-12) {
                double step = 0.0;
                for (std::size_t j = 0; j < trial.soc.size(); ++j) step = std::max(step, std::abs(trial.soc[j] - best.soc[j]));
                best = std::move(trial);
                if (step < 1e-4) break;
            } else {
                radius *= 0.5;
            }
        }
    }

    // Convex-concave penalty when the relaxation charges and discharges at once.
    auto bilinear = [](const Iterate& it) {
        double worst = 0.0;
        for (const auto& p : it.storage) worst = std::max(worst, p.fwd * -p.rev);
        return worst;
    };
    if (bilinear(best) > prob_.nu) {
        Formulation f = form;
        f.rho = 1.0;
        for (int outer = 0; outer < 50 && bilinear(best) > prob_.nu; ++outer) {
            f.anchor.clear();
            for (const auto& p : best.storage) f.anchor.emplace_back(p.fwd, p.rev);
            Iterate trial = solve(f, qp_iterations);
            ++diag.outer_iterations;
            if (trial.qp.ok()) best = std::move(trial);
            f.rho = std::min(f.rho * 4.0, 1e6);
        }
    }

    diag.qp_iterations = qp_iterations;
    diag.kkt_residual = std::max(best.qp.primal_residual, best.qp.dual_residual);
    diag.max_bilinear = bilinear(best);
    diag.max_linear_violation = linear_violation(best);
    diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (diag.max_linear_violation > 1e-6) {
        throw SolverFailure("stage-1 solution violates linear constraints by " +
                                std::to_string(diag.max_linear_violation),
                            diag);
    }
    if (diag.max_bilinear > prob_.nu) {
        throw SolverFailure("simultaneous charge and discharge above the bilinear cap", diag);
    }

    DispatchSchedule dis;
    dis.begin = prob_.grid.begin;
    dis.length = prob_.grid.length;
    dis.grid = std::move(best.grid);
    dis.storage = std::move(best.storage);
    dis.soc = std::move(best.soc);
    dis.slack.assign(dis.soc.size(), 0.0);
    for (std::size_t j = 1; j < dis.slack.size(); ++j) dis.slack[j] = std::max(best.residual[j], 0.0);
    dis.energy_min = tvb_.e_min;
    dis.energy_max = tvb_.e_max;
    for (std::size_t j = 0; j < dis.soc.size(); ++j) dis.probability.push_back(profiles_[j].probability(dis.soc[j]));
    dis.objective = best.merit;
    dis.diagnostics = diag;
    return dis;
}

}  // namespace

DispatchSchedule solve_dispatch(const ScheduleProblem& prob, const CostModel& cm) {
    prob.validate();
    cm.validate();
    return DispatchSolver(prob, cm).run();
}

namespace {

constexpr const char* kScheduleHeader[] = {"step",           "net_kw",         "import_kw",     "export_kw",
                                           "storage_fwd_kw", "storage_rev_kw", "soc_start_kwh", "soc_end_kwh",
                                           "slack",          "committed"};

}  // namespace

void write_schedule(std::ostream& os, const DispatchSchedule& dis) {
    text::write_row(os, std::vector<std::string>(std::begin(kScheduleHeader), std::end(kScheduleHeader)));
    for (std::size_t i = 0; i < dis.grid.size(); ++i) {
        const auto& g = dis.grid[i];
        const auto& p = dis.storage[i];
        text::write_row(os, {std::to_string(dis.begin + static_cast<int>(i)), text::exact(g.net()), text::exact(g.fwd),
                             text::exact(g.rev), text::exact(p.fwd), text::exact(p.rev), text::exact(dis.soc[i]),
                             text::exact(dis.soc[i + 1]), text::exact(dis.slack[i + 1]),
                             static_cast<int>(i) < dis.length ? "1" : "0"});
    }
}

DispatchSchedule read_schedule(std::istream& is) {
    const auto t = text::read_table(is);
    if (t.rows.empty()) throw std::runtime_error("schedule file has no rows");
    std::size_t col[std::size(kScheduleHeader)];
    for (std::size_t c = 0; c < std::size(kScheduleHeader); ++c) col[c] = t.column(kScheduleHeader[c]);

    DispatchSchedule dis;
    dis.begin = static_cast<int>(t.integer(0, col[0]));
    dis.soc.push_back(t.number(0, col[6]));
    dis.slack.push_back(0.0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.integer(r, col[0]) != dis.begin + static_cast<long>(r)) {
            throw std::runtime_error("schedule steps must be consecutive");
        }
        dis.grid.push_back({t.number(r, col[2]), t.number(r, col[3])});
        dis.storage.push_back({t.number(r, col[4]), t.number(r, col[5])});
        dis.soc.push_back(t.number(r, col[7]));
        dis.slack.push_back(t.number(r, col[8]));
        if (t.integer(r, col[9]) == 1) dis.length = static_cast<int>(r) + 1;
    }
    return dis;
}

}  // namespace dcs
