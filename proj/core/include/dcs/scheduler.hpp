#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcs/aggregator.hpp"
#include "dcs/distribution.hpp"
#include "dcs/power.hpp"

namespace dcs {

/// Tariff and penalty weights. Per-step coefficients are indexed by the
/// offset from the window start; a single entry applies to every step.
struct CostModel {
    std::vector<Eigen::Matrix2d> quadratic{Eigen::Matrix2d::Identity() * 0.05};
    std::vector<Eigen::Vector2d> linear{Eigen::Vector2d(0.3, 0.15)};
    double incremental = 0.02;
    double alpha_eps = 1e4;
    double alpha_sigma = 1e3;
    double overcharge = 0.03;

    [[nodiscard]] const Eigen::Matrix2d& C(std::size_t offset) const;
    [[nodiscard]] const Eigen::Vector2d& c(std::size_t offset) const;

    /// Throws std::invalid_argument for indefinite C or nonpositive weights.
    void validate() const;
};

/// gᵀCg + cᵀg + c^i·1ᵀ(g_now − g_prev)² for the coefficients at `offset`.
[[nodiscard]] double evaluate_cost(const PowerFlow& g_now, const PowerFlow& g_prev, const CostModel& cm,
                                   std::size_t offset = 0);

/// F(ê − ē) − F(ê − e̲) + level. Nonpositive when P[e̲ ≤ ê − X ≤ ē] reaches
/// `level` for a deviation X whose smoothed CDF is F.
[[nodiscard]] double chance_constraint_residual(double e_hat, double e_lo, double e_hi,
                                                const EmpiricalDistribution& F, double level);

/// Largest per-step decrease of ê allowed after the last departure:
/// excess / (horizon_end − last_departure).
[[nodiscard]] double terminal_ramp_bound(double excess, int last_departure, int horizon_end);

struct RampViolation {
    int step;
    double amount;
};

/// Checks ê over SOC points begin.. for k ≥ last_departure. With an ESS the
/// decrease ê(k) − ê(k+1) must stay within `bound`; without one ê must not
/// decrease at all.
[[nodiscard]] std::vector<RampViolation> check_terminal_ramp(std::span<const double> e_hat, int begin,
                                                            int last_departure, double bound, bool has_ess,
                                                            double tol = 1e-6);

struct ScheduleProblem {
    TimeGrid grid;
    StorageDevice ess;
    FleetCalendar fleet;
    /// Arrival SOC distribution for every calendar vehicle.
    std::vector<EmpiricalDistribution> arrival_soc;
    ForecastBundle forecast;
    double reliability = 0.85;  // 1 − ε
    double nu = 1e-3;
    double initial_soc = 0.0;    // ê(k_b)
    PowerFlow previous_grid;     // committed g_s(k_b − 1)
    DepartureBound departure_rule = DepartureBound::NetOfArrivalFloor;

    [[nodiscard]] bool has_ess() const noexcept { return ess.p_max > ess.p_min && ess.e_max > ess.e_min; }
    /// Throws std::invalid_argument when the data do not cover the extended window.
    void validate() const;
};

struct SolverDiagnostics {
    int outer_iterations = 0;
    int qp_iterations = 0;
    double kkt_residual = 0.0;
    double max_bilinear = 0.0;
    double max_linear_violation = 0.0;
    double seconds = 0.0;
};

/// Stage-1 result over the extended window. Power series hold
/// `steps()` entries, SOC series one more.
struct DispatchSchedule {
    int begin = 0;
    int length = 0;  // committed steps S
    std::vector<PowerFlow> grid;
    std::vector<PowerFlow> storage;
    std::vector<double> soc;
    std::vector<double> slack;
    std::vector<double> energy_min;
    std::vector<double> energy_max;
    std::vector<double> probability;  // P[e̲ ≤ e ≤ ē] at each SOC point
    double objective = 0.0;
    SolverDiagnostics diagnostics;

    [[nodiscard]] std::size_t steps() const noexcept { return grid.size(); }
    [[nodiscard]] int end() const noexcept { return begin + length; }
    /// Scheduled exchange at absolute step k of the committed window.
    [[nodiscard]] const PowerFlow& at(int k) const;
    [[nodiscard]] double total_slack() const noexcept;
    /// Σ evaluate_cost over the committed steps.
    [[nodiscard]] double committed_cost(const CostModel& cm, const PowerFlow& previous) const;
};

class InfeasibleSchedule : public std::runtime_error {
public:
    InfeasibleSchedule(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
    [[nodiscard]] int step() const noexcept { return step_; }

private:
    int step_;
};

class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, SolverDiagnostics diag)
        : std::runtime_error(what), diag_(diag) {}
    [[nodiscard]] const SolverDiagnostics& diagnostics() const noexcept { return diag_; }

private:
    SolverDiagnostics diag_;
};

/// Superlevel interval of p(ê) = P[e̲ ≤ ê − X ≤ ē] over ê; `feasible` is
/// false when the level exceeds max p, in which case lo == hi == argmax.
struct ReliabilityInterval {
    double lo;
    double hi;
    double peak;
    bool feasible;
};

/// Energy-deviation CDF the chance constraints use at one SOC point: the
/// distribution of ê − e, with e the realized aggregate SOC. A single-node
/// deviation is treated as an exact point mass, accepting ê within
/// kPointTolerance of its interval.
struct ReliabilityProfile {
    static constexpr double kPointTolerance = 1e-6;

    EmpiricalDistribution deviation;
    double e_lo = 0.0;
    double e_hi = 0.0;

    [[nodiscard]] bool degenerate() const noexcept { return deviation.size() == 1; }

    [[nodiscard]] double probability(double e_hat) const noexcept;
    /// Left and right derivatives of probability().
    [[nodiscard]] std::pair<double, double> slopes(double e_hat) const noexcept;
    [[nodiscard]] ReliabilityInterval interval(double level) const;
};

/// Profiles for SOC points begin..begin+steps (entry 0 is deterministic).
[[nodiscard]] std::vector<ReliabilityProfile> reliability_profiles(const ScheduleProblem& prob,
                                                                  const TimeVaryingBattery& tvb);

[[nodiscard]] TimeVaryingBattery schedule_battery(const ScheduleProblem& prob);

/// Solves the day-ahead problem. Throws InfeasibleSchedule when the robust
/// power bounds leave no admissible exchange and SolverFailure when the
/// optimizer does not converge.
[[nodiscard]] DispatchSchedule solve_dispatch(const ScheduleProblem& prob, const CostModel& cm);

/// Delimited text with a one-line header; full double precision so that
/// read_schedule reproduces the schedule exactly.
void write_schedule(std::ostream& os, const DispatchSchedule& dis);
[[nodiscard]] DispatchSchedule read_schedule(std::istream& is);

}  // namespace dcs
