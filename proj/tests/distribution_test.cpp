#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dcs/distribution.hpp"
#include "oracles.hpp"

using namespace dcs;
using oracle::random_lattice;

namespace {

QuantileForecast quantiles(std::vector<double> levels, std::vector<double> values) {
    QuantileForecast q;
    q.levels = std::move(levels);
    q.values = std::move(values);
    return q;
}

// Uniform on [0, 10] described by its deciles.
QuantileForecast uniform_0_10() {
    return quantiles({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
}

}  // namespace

TEST(QuantileCdf, SingleQuantileIsPointMass) {
    const auto cdf = cdf_from_quantiles(quantiles({0.5}, {3.0}));
    EXPECT_DOUBLE_EQ(cdf.lower(), 3.0);
    EXPECT_DOUBLE_EQ(cdf.upper(), 3.0);
    EXPECT_DOUBLE_EQ(cdf(2.999), 0.0);
    EXPECT_DOUBLE_EQ(cdf(3.0), 1.0);
    const auto d = distribution_from_quantiles(quantiles({0.5}, {3.0}), {});
    EXPECT_NEAR(d.mean(), 3.0, 1e-12);
    EXPECT_NEAR(d.variance(), 0.0, 1e-12);
}

TEST(QuantileCdf, MedianFromThreeQuantiles) {
    const auto cdf = cdf_from_quantiles(quantiles({0.25, 0.5, 0.75}, {1, 2, 3}));
    EXPECT_NEAR(cdf.quantile(0.5), 2.0, 1e-12);
    EXPECT_NEAR(cdf(2.0), 0.5, 1e-12);
    // Tails are one spacing wide.
    EXPECT_DOUBLE_EQ(cdf.lower(), 0.0);
    EXPECT_DOUBLE_EQ(cdf.upper(), 4.0);
}

TEST(QuantileCdf, AxiomsOnRandomForecasts) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> gap(0.0, 2.0);
    const std::vector<double> levels{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
    for (int t = 0; t < 100; ++t) {
        std::vector<double> values{gap(rng) - 5.0};
        for (std::size_t i = 1; i < levels.size(); ++i) values.push_back(values.back() + gap(rng));
        const auto cdf = cdf_from_quantiles(quantiles(levels, values));
        EXPECT_DOUBLE_EQ(cdf(cdf.upper()), 1.0);
        EXPECT_DOUBLE_EQ(cdf(cdf.lower() - 1.0), 0.0);
        double prev = 0.0;
        for (double x = cdf.lower() - 1.0; x <= cdf.upper() + 1.0; x += 0.01) {
            const double p = cdf(x);
            EXPECT_GE(p, prev);
            prev = p;
        }
        const auto d = distribution_from_quantiles(quantiles(levels, values), {});
        EXPECT_NO_THROW(d.validate());
        prev = 0.0;
        for (double x = d.lo() - 1.0; x <= d.hi() + 1.0; x += 0.013) {
            EXPECT_GE(d.cdf(x), prev);
            prev = d.cdf(x);
        }
        EXPECT_DOUBLE_EQ(d.cdf(d.hi() + 1.0), 1.0);
    }
}

TEST(QuantileCdf, RejectsMalformedForecasts) {
    EXPECT_THROW(quantiles({0.5, 0.4}, {1, 2}).validate(), std::invalid_argument);
    EXPECT_THROW(quantiles({0.4, 0.5}, {2, 1}).validate(), std::invalid_argument);
    EXPECT_THROW(quantiles({0.0}, {1}).validate(), std::invalid_argument);
    EXPECT_THROW((void)distribution_from_quantiles(uniform_0_10(), {0.1, 2.0, 5.0}), std::invalid_argument);
}

TEST(Convolution, PointMassIsIdentity) {
    std::mt19937_64 rng(1);
    const auto f = random_lattice(rng, 0.1, 12);
    const auto g = convolve(f, EmpiricalDistribution::point_mass(0.0));
    ASSERT_EQ(g.size(), f.size());
    EXPECT_NEAR(g.lo(), f.lo(), 1e-12);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(g.pdf()[i], f.pdf()[i], 1e-15);
}

TEST(Convolution, TwoFairCoins) {
    const EmpiricalDistribution coin(1.0, 0.0, {0.5, 0.5});
    const auto s = convolve(coin, coin);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(s.lo(), 0.0);
    EXPECT_DOUBLE_EQ(s.pdf()[0], 0.25);
    EXPECT_DOUBLE_EQ(s.pdf()[1], 0.5);
    EXPECT_DOUBLE_EQ(s.pdf()[2], 0.25);
}

TEST(Convolution, RejectsMismatchedSteps) {
    EXPECT_THROW((void)convolve(EmpiricalDistribution::point_mass(0.0, 0.1), EmpiricalDistribution::point_mass(0.0, 0.2)),
                 std::invalid_argument);
}

TEST(Convolution, AlgebraicProperties) {
    std::mt19937_64 rng(2024);
    const double step = 0.1;
    for (int t = 0; t < 50; ++t) {
        const auto a = random_lattice(rng, step, 15);
        const auto b = random_lattice(rng, step, 15);
        const auto c = random_lattice(rng, step, 15);
        const auto ab = convolve(a, b);
        const auto ba = convolve(b, a);
        EXPECT_NEAR(ab.mass(), 1.0, 1e-6);
        EXPECT_NEAR(ab.mean(), ba.mean(), 2 * step);
        EXPECT_NEAR(ab.variance(), ba.variance(), 2 * step * step);
        const auto left = convolve(ab, c);
        const auto right = convolve(a, convolve(b, c));
        EXPECT_NEAR(left.mean(), right.mean(), 2 * step);
        EXPECT_NEAR(left.variance(), right.variance(), 2 * step * step);
        EXPECT_NEAR(ab.mean(), a.mean() + b.mean(), 1e-9);
        EXPECT_NEAR(ab.variance(), a.variance() + b.variance(), 1e-9);
    }
}

TEST(EmpiricalDistribution, OffLatticePointsKeepTheMean) {
    const std::vector<double> v{1.234, 5.678, -2.05};
    const std::vector<double> w{1.0, 2.0, 1.0};
    const auto d = EmpiricalDistribution::from_points(v, w, 0.1);
    EXPECT_NEAR(d.mean(), (1.234 + 2 * 5.678 - 2.05) / 4.0, 1e-12);
    EXPECT_NEAR(d.mass(), 1.0, 1e-12);
}

TEST(EmpiricalDistribution, SmoothedAndLatticeCdf) {
    const EmpiricalDistribution d(1.0, 0.0, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(d.cdf_at(-0.1), 0.0);
    EXPECT_DOUBLE_EQ(d.cdf_at(0.0), 0.5);
    EXPECT_DOUBLE_EQ(d.cdf_at(1.0), 1.0);
    EXPECT_DOUBLE_EQ(d.cdf(-0.5), 0.0);
    EXPECT_DOUBLE_EQ(d.cdf(0.0), 0.25);
    EXPECT_DOUBLE_EQ(d.cdf(0.5), 0.5);
    EXPECT_DOUBLE_EQ(d.cdf(1.5), 1.0);
    EXPECT_DOUBLE_EQ(d.density(0.2), 0.5);
    EXPECT_NEAR(d.quantile(0.25), 0.0, 1e-12);
    const auto m = d.mirrored();
    EXPECT_DOUBLE_EQ(m.lo(), -1.0);
    EXPECT_NEAR(m.mean(), -0.5, 1e-12);
}

TEST(RobustBounds, Examples) {
    const auto pm = robust_bounds(quantiles({0.5}, {3.0}), 0.9);
    EXPECT_DOUBLE_EQ(pm.first, 3.0);
    EXPECT_DOUBLE_EQ(pm.second, 3.0);
    const auto u = robust_bounds(uniform_0_10(), 0.98);
    EXPECT_NEAR(u.first, 0.1, 1e-12);
    EXPECT_NEAR(u.second, 9.9, 1e-12);
    const auto full = robust_bounds(uniform_0_10(), 1.0);
    EXPECT_NEAR(full.first, 0.0, 1e-12);
    EXPECT_NEAR(full.second, 10.0, 1e-12);
}

TEST(EnergyDeviation, NoUncertaintyGivesPointMass) {
    ForecastBundle b;
    b.begin = 12;
    b.expected = {0.0};
    b.lower = {0.0};
    b.upper = {0.0};
    b.energy_error = {EmpiricalDistribution::point_mass(0.0), EmpiricalDistribution::point_mass(0.0)};
    for (int k : {12, 13}) {
        const auto d = energy_deviation_distribution(b, k, {});
        EXPECT_NEAR(d.mean(), 0.0, 1e-12);
        EXPECT_NEAR(d.variance(), 0.0, 1e-12);
    }
    EXPECT_THROW((void)energy_deviation_distribution(b, 14, {}), std::out_of_range);
}

TEST(EnergyDeviation, SymmetricErrorIsUnchanged) {
    ForecastBundle b;
    b.begin = 0;
    b.expected = {0.0};
    b.lower = {-1.0};
    b.upper = {1.0};
    const EmpiricalDistribution sym(0.1, -0.2, {0.1, 0.2, 0.4, 0.2, 0.1});
    b.energy_error = {EmpiricalDistribution::point_mass(0.0), sym};
    const auto d = energy_deviation_distribution(b, 1, {});
    ASSERT_EQ(d.size(), sym.size());
    EXPECT_NEAR(d.lo(), sym.lo(), 1e-12);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d.pdf()[i], sym.pdf()[i], 1e-15);
}

TEST(EnergyDeviation, TwoPointArrival) {
    ForecastBundle b;
    b.begin = 0;
    b.expected = {0.0};
    b.lower = {0.0};
    b.upper = {0.0};
    b.energy_error = {EmpiricalDistribution::point_mass(0.0), EmpiricalDistribution::point_mass(0.0)};
    const std::vector<double> soc{10.0, 20.0};
    const std::vector<double> w{0.5, 0.5};
    const std::vector<EmpiricalDistribution> arrivals{EmpiricalDistribution::from_points(soc, w)};
    const auto d = energy_deviation_distribution(b, 1, arrivals);
    EXPECT_NEAR(d.cdf_at(9.95), 0.0, 1e-12);
    EXPECT_NEAR(d.cdf_at(10.0), 0.5, 1e-12);
    EXPECT_NEAR(d.cdf_at(19.95), 0.5, 1e-12);
    EXPECT_NEAR(d.cdf_at(20.0), 1.0, 1e-12);
}

TEST(EnergyDeviation, MatchesBruteForceEnumeration) {
    EXPECT_LE(oracle::convolution_worst_error(99, 100), 1e-9);
}
