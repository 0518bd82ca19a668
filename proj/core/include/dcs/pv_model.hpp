#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dcs/distribution.hpp"
#include "dcs/scenario.hpp"

namespace dcs {

/// Clear-sky PV output (kW) averaged over hour `hour` of day-of-year `doy`
/// for a southern-hemisphere site.
[[nodiscard]] double clear_sky_kw(int doy, int hour, double capacity_kw);

/// Realized inflexible prosumption l(k) = −PV(k) and its forecasts. Steps
/// are hours from the start of the run.
class ProsumptionSource {
public:
    virtual ~ProsumptionSource() = default;
    [[nodiscard]] virtual double realized(int k) = 0;
    /// Day-ahead forecast issued at `issue` for power steps begin..begin+steps-1.
    [[nodiscard]] virtual ForecastBundle day_ahead(int issue, int begin, int steps) = 0;
    /// Point forecast l̂(h | k) for h > k.
    [[nodiscard]] virtual double intraday(int k, int h) = 0;
    /// Fresh ΔE_l(begin + j) draws consistent with the day-ahead forecast,
    /// used by the chance-constraint audit. Column j holds j = 0..steps.
    [[nodiscard]] virtual std::vector<std::vector<double>> energy_error_draws(int issue, int begin, int steps,
                                                                              int draws, std::uint64_t seed);
};

/// Clear-sky curve scaled by a clipped attenuation x = clamp(a_d + η, 0, 1).
/// The daily level a_d follows a latent AR(1) over days and is known to the
/// forecaster; η is an hourly AR(1) whose spread peaks for partly cloudy
/// days. With `deterministic` the spread is zero.
class SyntheticPv final : public ProsumptionSource {
public:
    SyntheticPv(const PvSettings& pv, const ForecastSettings& fc, int start_doy, int days, std::uint64_t seed,
                bool deterministic);

    double realized(int k) override;
    ForecastBundle day_ahead(int issue, int begin, int steps) override;
    double intraday(int k, int h) override;
    std::vector<std::vector<double>> energy_error_draws(int issue, int begin, int steps, int draws,
                                                        std::uint64_t seed) override;

    [[nodiscard]] double daily_level(int day) const { return level_.at(static_cast<std::size_t>(day)); }
    [[nodiscard]] double spread(int day) const;
    /// Quantile forecast of l(k), exact for the generating model.
    [[nodiscard]] QuantileForecast quantiles(int issue, int k) const;

private:
    [[nodiscard]] int day_of(int k) const;
    [[nodiscard]] double clear_sky(int k) const;
    [[nodiscard]] std::vector<double> sample_path(int begin, int steps, std::mt19937_64& rng) const;

    PvSettings pv_;
    ForecastSettings fc_;
    int start_doy_;
    bool deterministic_;
    std::uint64_t seed_;
    std::vector<double> level_;  // a_d per day (one spare day for the extension)
    std::vector<double> eta_;    // hourly deviation
};

/// Prosumption from files: trace rows (step, l_kw) and quantile rows
/// (issue_step, step, tau, value). ΔE_l is pooled from the forecast error
/// partial sums of earlier issues; with fewer than `min_history` of them the
/// per-step error distributions are convolved as if independent.
class TraceSource final : public ProsumptionSource {
public:
    TraceSource(const std::string& trace_path, const std::string& quantile_path, const ForecastSettings& fc,
                int min_history = 5);

    double realized(int k) override;
    ForecastBundle day_ahead(int issue, int begin, int steps) override;
    double intraday(int k, int h) override;

private:
    [[nodiscard]] const QuantileForecast& forecast(int issue, int k) const;

    ForecastSettings fc_;
    int min_history_;
    std::map<int, double> trace_;
    std::map<int, std::map<int, QuantileForecast>> quantiles_;  // issue -> step -> forecast
};

[[nodiscard]] std::unique_ptr<ProsumptionSource> make_source(const Scenario& s, int start_doy, int days,
                                                             std::uint64_t seed);

}  // namespace dcs
