#include "dcs/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dcs {

namespace {

constexpr double kLatticeEps = 1e-9;

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

void QuantileForecast::validate() const {
    if (levels.empty() || levels.size() != values.size()) {
        throw std::invalid_argument("quantile forecast needs matching, nonempty levels and values");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw std::invalid_argument("quantile level outside (0, 1)");
        if (!std::isfinite(values[i])) throw std::invalid_argument("quantile value is not finite");
        if (i > 0 && !(levels[i] > levels[i - 1])) throw std::invalid_argument("quantile levels must increase strictly");
        if (i > 0 && values[i] < values[i - 1]) throw std::invalid_argument("quantile values must be non-decreasing");
    }
}

PiecewiseLinearCdf::PiecewiseLinearCdf(std::vector<double> x, std::vector<double> p)
    : x_(std::move(x)), p_(std::move(p)) {
    if (x_.size() < 2 || x_.size() != p_.size()) throw std::invalid_argument("CDF needs at least two breakpoints");
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (x_[i] < x_[i - 1] || p_[i] < p_[i - 1]) throw std::invalid_argument("CDF breakpoints must be non-decreasing");
    }
    if (p_.front() != 0.0 || p_.back() != 1.0) throw std::invalid_argument("CDF must run from 0 to 1");
}

double PiecewiseLinearCdf::operator()(double x) const noexcept {
    if (x < x_.front()) return 0.0;
    if (x >= x_.back()) return 1.0;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return p_[i] + (p_[i + 1] - p_[i]) * w;
}

double PiecewiseLinearCdf::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
    if (p <= 0.0) return x_.front();
    const auto it = std::lower_bound(p_.begin(), p_.end(), p);
    const auto i = static_cast<std::size_t>(it - p_.begin());
    const double dp = p_[i] - p_[i - 1];
    return x_[i - 1] + (p - p_[i - 1]) / dp * (x_[i] - x_[i - 1]);
}

double PiecewiseLinearCdf::mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 1; i < x_.size(); ++i) m += (p_[i] - p_[i - 1]) * 0.5 * (x_[i] + x_[i - 1]);
    return m;
}

PiecewiseLinearCdf cdf_from_quantiles(const QuantileForecast& qf, double single_tail_width) {
    qf.validate();
    const auto& q = qf.values;
    const auto& tau = qf.levels;
    const std::size_t n = q.size();
    std::vector<double> x;
    std::vector<double> p;
    x.reserve(n + 2);
    p.reserve(n + 2);
    const double w_lo = n == 1 ? single_tail_width : q[1] - q[0];
    const double w_hi = n == 1 ? single_tail_width : q[n - 1] - q[n - 2];
    x.push_back(q[0] - w_lo);
    p.push_back(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        x.push_back(q[i]);
        p.push_back(tau[i]);
    }
    x.push_back(q[n - 1] + w_hi);
    p.push_back(1.0);
    return PiecewiseLinearCdf(std::move(x), std::move(p));
}

EmpiricalDistribution::EmpiricalDistribution(double step, double lo, std::vector<double> pdf)
    : step_(step), lo_(lo), pdf_(std::move(pdf)) {
    if (!(step_ > 0.0)) throw std::invalid_argument("lattice step must be positive");
    if (pdf_.empty()) throw std::invalid_argument("distribution needs at least one node");
    for (double w : pdf_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("probability masses must be finite and nonnegative");
    }
    rebuild_cumulative();
}

void EmpiricalDistribution::rebuild_cumulative() {
    cum_.assign(pdf_.size() + 1, 0.0);
    std::partial_sum(pdf_.begin(), pdf_.end(), cum_.begin() + 1);
}

EmpiricalDistribution EmpiricalDistribution::point_mass(double value, double step) {
    return EmpiricalDistribution(step, value, {1.0});
}

EmpiricalDistribution EmpiricalDistribution::from_points(std::span<const double> values,
                                                         std::span<const double> weights,
                                                         double step) {
    if (values.empty() || values.size() != weights.size()) {
        throw std::invalid_argument("points need matching, nonempty values and weights");
    }
    if (!(step > 0.0)) throw std::invalid_argument("lattice step must be positive");
    const auto [vmin, vmax] = std::minmax_element(values.begin(), values.end());
    const double lo = std::floor(*vmin / step + kLatticeEps) * step;
    const auto n = static_cast<std::size_t>(std::floor((*vmax - lo) / step + kLatticeEps)) + 2;
    std::vector<double> pdf(n, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double w = weights[j];
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("point weights must be finite and nonnegative");
        const double t = (values[j] - lo) / step;
        auto i = static_cast<std::size_t>(std::floor(t + kLatticeEps));
        const double frac = t - static_cast<double>(i);
        if (frac <= kLatticeEps) {
            pdf[i] += w;
        } else {
            pdf[i] += w * (1.0 - frac);
            pdf[i + 1] += w * frac;
        }
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("point weights sum to zero");
    for (double& w : pdf) w /= total;
    while (pdf.size() > 1 && pdf.back() == 0.0) pdf.pop_back();
    return EmpiricalDistribution(step, lo, std::move(pdf));
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::span<const double> samples, double step) {
    const std::vector<double> weights(samples.size(), 1.0);
    return from_points(samples, weights, step);
}

double EmpiricalDistribution::mass() const noexcept { return cum_.empty() ? 0.0 : cum_.back(); }

double EmpiricalDistribution::mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < pdf_.size(); ++i) m += pdf_[i] * node(i);
    return m / mass();
}

double EmpiricalDistribution::variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < pdf_.size(); ++i) {
        const double d = node(i) - m;
        v += pdf_[i] * d * d;
    }
    return v / mass();
}

double EmpiricalDistribution::cdf(double x) const noexcept {
    const double t = (x - lo_) / step_ + 0.5;
    if (t <= 0.0) return 0.0;
    const auto n = static_cast<double>(pdf_.size());
    if (t >= n) return cum_.back();
    const auto i = static_cast<std::size_t>(t);
    return cum_[i] + pdf_[i] * (t - static_cast<double>(i));
}

double EmpiricalDistribution::density(double x) const noexcept {
    const double t = (x - lo_) / step_ + 0.5;
    if (t < 0.0 || t >= static_cast<double>(pdf_.size())) return 0.0;
    return pdf_[static_cast<std::size_t>(t)] / step_;
}

double EmpiricalDistribution::cdf_at(double x) const noexcept {
    const double t = std::floor((x - lo_) / step_ + kLatticeEps);
    if (t < 0.0) return 0.0;
    if (t >= static_cast<double>(pdf_.size() - 1)) return cum_.back();
    return cum_[static_cast<std::size_t>(t) + 1];
}

double EmpiricalDistribution::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
    const double target = p * mass();
    const auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), target);
    if (it == cum_.end()) return hi() + 0.5 * step_;
    const auto i = static_cast<std::size_t>(it - cum_.begin()) - 1;
    // pdf_[i] > 0 here unless target == cum_[i], which lower_bound excludes for i > 0.
    const double frac = pdf_[i] > 0.0 ? (target - cum_[i]) / pdf_[i] : 0.0;
    return node(i) - 0.5 * step_ + frac * step_;
}

EmpiricalDistribution EmpiricalDistribution::mirrored() const {
    std::vector<double> pdf(pdf_.rbegin(), pdf_.rend());
    return EmpiricalDistribution(step_, -hi(), std::move(pdf));
}

EmpiricalDistribution EmpiricalDistribution::shifted(double delta) const {
    return EmpiricalDistribution(step_, lo_ + delta, pdf_);
}

EmpiricalDistribution EmpiricalDistribution::trimmed(double eps) const {
    std::size_t first = 0;
    std::size_t last = pdf_.size();
    while (first + 1 < last && cum_[first + 1] <= eps) ++first;
    while (last - 1 > first && cum_.back() - cum_[last - 1] <= eps) --last;
    std::vector<double> pdf(pdf_.begin() + static_cast<std::ptrdiff_t>(first),
                            pdf_.begin() + static_cast<std::ptrdiff_t>(last));
    return EmpiricalDistribution(step_, node(first), std::move(pdf));
}

void EmpiricalDistribution::validate() const {
    if (pdf_.empty()) throw std::invalid_argument("empty distribution");
    if (std::abs(mass() - 1.0) > 1e-6) {
        throw std::invalid_argument("distribution mass " + std::to_string(mass()) + " differs from one");
    }
}

EmpiricalDistribution convolve(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    if (!same_step(a.step(), b.step())) throw std::invalid_argument("convolution requires equal lattice steps");
    const auto pa = a.pdf();
    const auto pb = b.pdf();
    std::vector<double> out(pa.size() + pb.size() - 1, 0.0);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double wa = pa[i];
        if (wa == 0.0) continue;
        double* dst = out.data() + i;
        for (std::size_t j = 0; j < pb.size(); ++j) dst[j] += wa * pb[j];
    }
    return EmpiricalDistribution(a.step(), a.lo() + b.lo(), std::move(out));
}

EmpiricalDistribution distribution_from_quantiles(const QuantileForecast& qf, const ValueGrid& grid,
                                                  double single_tail_width) {
    const PiecewiseLinearCdf cdf = cdf_from_quantiles(qf, single_tail_width);
    const double h = grid.step;
    if (!(h > 0.0)) throw std::invalid_argument("grid step must be positive");
    if (grid.lo && *grid.lo > qf.values.front() + kLatticeEps) {
        throw std::invalid_argument("grid lower bound cuts into the quantile span");
    }
    if (grid.hi && *grid.hi < qf.values.back() - kLatticeEps) {
        throw std::invalid_argument("grid upper bound cuts into the quantile span");
    }
    const double lo_value = grid.lo.value_or(cdf.lower());
    const double hi_value = grid.hi.value_or(cdf.upper());
    const double lo = std::floor(lo_value / h + kLatticeEps) * h;
    const auto n = static_cast<std::size_t>(std::ceil((hi_value - lo) / h - kLatticeEps)) + 1;
    std::vector<double> pdf(n, 0.0);
    double below = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double upper = i + 1 == n ? 1.0 : cdf(lo + (static_cast<double>(i) + 0.5) * h);
        pdf[i] = std::max(upper - below, 0.0);
        below = std::max(below, upper);
    }
    return EmpiricalDistribution(h, lo, std::move(pdf));
}

std::pair<double, double> robust_bounds(const QuantileForecast& qf, double coverage) {
    if (!(coverage > 0.5 && coverage <= 1.0)) throw std::invalid_argument("coverage must lie in (0.5, 1]");
    const PiecewiseLinearCdf cdf = cdf_from_quantiles(qf);
    const double tail = 0.5 * (1.0 - coverage);
    return {cdf.quantile(tail), cdf.quantile(1.0 - tail)};
}

void ForecastBundle::validate() const {
    const std::size_t n = expected.size();
    if (n == 0 || lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("forecast bundle series must be nonempty and aligned");
    }
    if (energy_error.size() != n + 1) throw std::invalid_argument("forecast bundle needs one energy error per SOC point");
    for (std::size_t i = 0; i < n; ++i) {
        if (lower[i] > expected[i] + 1e-9 || expected[i] > upper[i] + 1e-9) {
            throw std::invalid_argument("expected prosumption outside robust bounds at step " +
                                        std::to_string(begin + static_cast<int>(i)));
        }
    }
    const auto& first = energy_error.front();
    if (first.empty() || std::abs(first.mean()) > 1e-12 || first.variance() > 1e-12) {
        throw std::invalid_argument("energy error at the window start must be the point mass at zero");
    }
    for (const auto& d : energy_error) d.validate();
}

EmpiricalDistribution energy_deviation_distribution(const ForecastBundle& bundle, int k,
                                                    std::span<const EmpiricalDistribution> arrivals) {
    const int idx = k - bundle.begin;
    if (idx < 0 || idx >= static_cast<int>(bundle.energy_error.size())) {
        throw std::out_of_range("SOC point " + std::to_string(k) + " outside the forecast bundle");
    }
    EmpiricalDistribution acc = bundle.energy_error[static_cast<std::size_t>(idx)].mirrored();
    for (const auto& f : arrivals) acc = convolve(acc, f).trimmed(1e-15);
    return acc;
}

}  // namespace dcs
