#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dcs {

/// Default lattice spacing for energy distributions (kWh).
inline constexpr double kDefaultGridStep = 0.1;

/// Quantiles of one forecast variable L(step | issue_step).
struct QuantileForecast {
    int step = 0;
    int issue_step = 0;
    std::vector<double> levels;  // strictly increasing, inside (0, 1)
    std::vector<double> values;  // non-decreasing

    /// Throws std::invalid_argument when levels/values are not a monotone quantile function.
    void validate() const;
};

/// Continuous, non-decreasing piecewise-linear CDF given by breakpoints.
class PiecewiseLinearCdf {
public:
    PiecewiseLinearCdf(std::vector<double> x, std::vector<double> p);

    [[nodiscard]] double operator()(double x) const noexcept;
    /// Smallest x with F(x) >= p.
    [[nodiscard]] double quantile(double p) const;
    [[nodiscard]] double mean() const noexcept;
    [[nodiscard]] double lower() const noexcept { return x_.front(); }
    [[nodiscard]] double upper() const noexcept { return x_.back(); }
    [[nodiscard]] std::span<const double> knots() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> probabilities() const noexcept { return p_; }

private:
    std::vector<double> x_;
    std::vector<double> p_;
};

/// Interpolates (value, level) pairs and closes the CDF with linear ramps
/// to 0 and 1, each as wide as the adjacent inter-quantile spacing. A single
/// quantile uses `single_tail_width` on both sides (0 gives a point mass).
[[nodiscard]] PiecewiseLinearCdf cdf_from_quantiles(const QuantileForecast& qf,
                                                    double single_tail_width = 0.0);

/// Probability masses on a uniform lattice x_i = lo + i * step.
///
/// Two CDF views are provided. `cdf()` spreads each node's mass uniformly over
/// its cell [x_i - step/2, x_i + step/2], which makes it continuous and
/// piecewise linear; the optimizer differentiates this one. `cdf_at()` is the
/// right-continuous lattice CDF, exact for discrete outcomes.
class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;
    EmpiricalDistribution(double step, double lo, std::vector<double> pdf);

    static EmpiricalDistribution point_mass(double value, double step = kDefaultGridStep);
    /// Mass at off-lattice values is split linearly between the two nearest
    /// nodes, which keeps the mean exact. Weights are normalized.
    static EmpiricalDistribution from_points(std::span<const double> values,
                                             std::span<const double> weights,
                                             double step = kDefaultGridStep);
    static EmpiricalDistribution from_samples(std::span<const double> samples,
                                              double step = kDefaultGridStep);

    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return lo_ + step_ * static_cast<double>(pdf_.size() - 1); }
    [[nodiscard]] std::size_t size() const noexcept { return pdf_.size(); }
    [[nodiscard]] double node(std::size_t i) const noexcept { return lo_ + step_ * static_cast<double>(i); }
    [[nodiscard]] std::span<const double> pdf() const noexcept { return pdf_; }
    [[nodiscard]] bool empty() const noexcept { return pdf_.empty(); }

    [[nodiscard]] double mass() const noexcept;
    [[nodiscard]] double mean() const noexcept;
    [[nodiscard]] double variance() const noexcept;

    [[nodiscard]] double cdf(double x) const noexcept;
    /// Derivative of cdf(); right-sided at cell boundaries.
    [[nodiscard]] double density(double x) const noexcept;
    [[nodiscard]] double cdf_at(double x) const noexcept;
    /// Inverse of cdf().
    [[nodiscard]] double quantile(double p) const;

    [[nodiscard]] EmpiricalDistribution mirrored() const;
    [[nodiscard]] EmpiricalDistribution shifted(double delta) const;
    /// Drops leading/trailing nodes whose cumulative mass is below `eps`.
    [[nodiscard]] EmpiricalDistribution trimmed(double eps) const;

    /// Throws std::invalid_argument unless the masses are finite, nonnegative
    /// and sum to one within 1e-6.
    void validate() const;

private:
    void rebuild_cumulative();

    double step_ = kDefaultGridStep;
    double lo_ = 0.0;
    std::vector<double> pdf_;
    std::vector<double> cum_;  // cum_[i] = sum of pdf_[0..i)
};

/// Discrete convolution on the Minkowski-sum lattice. Steps must agree.
[[nodiscard]] EmpiricalDistribution convolve(const EmpiricalDistribution& a,
                                             const EmpiricalDistribution& b);

/// Lattice for `distribution_from_quantiles`. Without explicit bounds the
/// lattice spans the CDF support.
struct ValueGrid {
    double step = kDefaultGridStep;
    std::optional<double> lo;
    std::optional<double> hi;
};

/// Discretizes the interpolated quantile CDF. Throws std::invalid_argument
/// when explicit grid bounds do not cover [q_first, q_last].
[[nodiscard]] EmpiricalDistribution distribution_from_quantiles(const QuantileForecast& qf,
                                                                const ValueGrid& grid,
                                                                double single_tail_width = 0.0);

inline constexpr double kDefaultCoverage = 0.998;

/// Central interval holding `coverage` probability of the interpolated CDF.
[[nodiscard]] std::pair<double, double> robust_bounds(const QuantileForecast& qf,
                                                      double coverage = kDefaultCoverage);

/// Everything the day-ahead problem needs from the forecasts of the
/// inflexible prosumption L(k | k0) over the extended horizon.
struct ForecastBundle {
    int begin = 0;                 // first power step (k_b)
    std::vector<double> expected;  // per power step
    std::vector<double> lower;
    std::vector<double> upper;
    /// Accumulated energy error at each SOC point begin..begin+steps(); the
    /// first entry is the point mass at zero.
    std::vector<EmpiricalDistribution> energy_error;

    [[nodiscard]] std::size_t steps() const noexcept { return expected.size(); }
    void validate() const;
};

/// Distribution of the aggregate energy deviation at SOC point k: the
/// mirrored accumulated prosumption error convolved in order with the
/// arrival-SOC distribution of every vehicle arrived by k.
[[nodiscard]] EmpiricalDistribution energy_deviation_distribution(
    const ForecastBundle& bundle, int k, std::span<const EmpiricalDistribution> arrivals);

}  // namespace dcs
