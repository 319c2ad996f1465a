// Normal CDF/quantile, Wilson intervals, two-sample KS, and the small
// summary helpers.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mbm/rng.hpp"
#include "mbm/stats.hpp"

namespace {

using namespace mbm;

TEST(Stats, NormalCdfSpotValues) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(2.0 * normal_cdf(-1.0), 0.3173105078629141, 1e-12);
    EXPECT_NEAR(2.0 * normal_cdf(-2.0), 0.04550026389635842, 1e-12);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
    EXPECT_LT(normal_cdf(-8.0), 1e-14);
    EXPECT_GT(normal_cdf(8.0), 1.0 - 1e-14);
}

TEST(Stats, NormalQuantileInvertsCdf) {
    EXPECT_DOUBLE_EQ(normal_quantile(0.5), 0.0);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
    for (double p = 0.001; p < 1.0; p += 0.001) {
        double x = normal_quantile(p);
        EXPECT_NEAR(normal_cdf(x), p, 1e-12);
    }
    EXPECT_THROW(normal_quantile(0.0), std::invalid_argument);
    EXPECT_THROW(normal_quantile(1.0), std::invalid_argument);
    EXPECT_THROW(normal_quantile(-0.3), std::invalid_argument);
}

TEST(Stats, WilsonIntervalPinnedValues) {
    Interval iv = wilson_interval(50, 100, 0.95);
    EXPECT_NEAR(iv.lo, 0.40383, 1e-5);
    EXPECT_NEAR(iv.hi, 0.59617, 1e-5);
    EXPECT_TRUE(iv.contains(0.5));
    EXPECT_FALSE(iv.contains(0.7));

    EXPECT_DOUBLE_EQ(wilson_interval(0, 25, 0.95).lo, 0.0);
    EXPECT_DOUBLE_EQ(wilson_interval(25, 25, 0.95).hi, 1.0);

    // Monotone in successes, shrinking in n.
    EXPECT_LT(wilson_interval(10, 100, 0.95).lo, wilson_interval(20, 100, 0.95).lo);
    EXPECT_GT(wilson_interval(50, 100, 0.95).width(), wilson_interval(500, 1000, 0.95).width());

    EXPECT_THROW(wilson_interval(1, 0, 0.95), std::invalid_argument);
    EXPECT_THROW(wilson_interval(6, 5, 0.95), std::invalid_argument);
    EXPECT_THROW(wilson_interval(1, 5, 1.0), std::invalid_argument);
}

TEST(Stats, KsTwoSamplePinnedValues) {
    std::vector<double> a{1.0, 2.0, 3.0};
    std::vector<double> b{1.5, 2.5, 3.5};
    KsResult r = ks_two_sample(a, b);
    EXPECT_NEAR(r.d, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(r.n_a, 3u);
    EXPECT_EQ(r.n_b, 3u);
    EXPECT_GT(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);

    EXPECT_DOUBLE_EQ(ks_two_sample(a, a).d, 0.0);
    EXPECT_DOUBLE_EQ(ks_two_sample(a, a).p_value, 1.0);

    std::vector<double> lo{0.0, 0.1, 0.2, 0.3};
    std::vector<double> hi{5.0, 6.0, 7.0};
    EXPECT_DOUBLE_EQ(ks_two_sample(lo, hi).d, 1.0);

    EXPECT_THROW(ks_two_sample({}, a), std::invalid_argument);
    EXPECT_THROW(ks_two_sample(a, {}), std::invalid_argument);
}

TEST(Stats, KsDistinguishesDistributions) {
    PathRng rng(2024, 0);
    std::vector<double> same_a, same_b, shifted;
    for (int i = 0; i < 2000; ++i) {
        same_a.push_back(rng.normal());
        same_b.push_back(rng.normal());
        shifted.push_back(rng.normal() + 0.5);
    }
    EXPECT_GT(ks_two_sample(same_a, same_b).p_value, 0.01);
    EXPECT_LT(ks_two_sample(same_a, shifted).p_value, 1e-6);
}

TEST(Stats, KolmogorovQTail) {
    EXPECT_NEAR(kolmogorov_q(1e-3), 1.0, 1e-12);
    EXPECT_LT(kolmogorov_q(3.0), 1e-7);
    for (double t = 0.3; t < 2.0; t += 0.1)
        EXPECT_GT(kolmogorov_q(t), kolmogorov_q(t + 0.1));
}

TEST(Stats, SummaryHelpers) {
    std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(mean(xs), 2.5);
    EXPECT_NEAR(sample_variance(xs), 5.0 / 3.0, 1e-15);
    EXPECT_NEAR(std_error(xs), std::sqrt(5.0 / 3.0 / 4.0), 1e-15);

    EXPECT_DOUBLE_EQ(quantile(xs, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile(xs, 0.5), 2.5);

    std::vector<double> empty, one{3.0};
    EXPECT_THROW(mean(empty), std::invalid_argument);
    EXPECT_THROW(sample_variance(one), std::invalid_argument);
    EXPECT_THROW(quantile(empty, 0.5), std::invalid_argument);
    EXPECT_THROW(quantile(xs, 1.5), std::invalid_argument);
}

TEST(Stats, RngStreamsAreIndependentAndReproducible) {
    PathRng a(9, 4), b(9, 4), c(9, 5);
    bool identical = true, differs = false;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t ua = a.next_u64(), ub = b.next_u64(), uc = c.next_u64();
        identical = identical && (ua == ub);
        differs = differs || (ua != uc);
    }
    EXPECT_TRUE(identical);
    EXPECT_TRUE(differs);

    PathRng u(1, 0);
    for (int i = 0; i < 10000; ++i) {
        double x = u.uniform();
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(Stats, NormalsHaveUnitMoments) {
    PathRng rng(55, 3);
    std::vector<double> zs(50000);
    for (auto& z : zs) z = rng.normal();
    EXPECT_NEAR(mean(zs), 0.0, 0.02);
    EXPECT_NEAR(sample_variance(zs), 1.0, 0.03);
}

}  // namespace
