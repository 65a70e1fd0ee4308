#include <gtest/gtest.h>

#include <random>

#include "rilab/sampling.hpp"
#include "rilab/stats.hpp"

using namespace rilab;

TEST(RunningStat, MatchesTwoPass) {
    std::vector<double> v{1, 4, 2, 8, 5, 7};
    RunningStat a, b, all;
    for (std::size_t i = 0; i < v.size(); ++i) {
        (i < 2 ? a : b).add(v[i]);
        all.add(v[i]);
    }
    a.merge(b);
    EXPECT_DOUBLE_EQ(all.mean(), 4.5);
    EXPECT_NEAR(all.variance(), 7.5, 1e-12);
    EXPECT_NEAR(a.mean(), all.mean(), 1e-12);
    EXPECT_NEAR(a.variance(), all.variance(), 1e-12);
}

TEST(ChiSquare, SurvivalFunction) {
    // chi2 with 2 dof has survival exp(-x/2)
    EXPECT_NEAR(chi_square_survival(3.0, 2), std::exp(-1.5), 1e-14);
    // 95% quantile of chi2(1)
    EXPECT_NEAR(chi_square_survival(3.841458820694124, 1), 0.05, 1e-10);
}

TEST(ChiSquare, MergesSparseBins) {
    std::vector<std::uint64_t> obs{50, 30, 15, 4, 1};
    std::vector<double> p{0.5, 0.3, 0.15, 0.04, 0.01};
    auto r = chi_square_test(obs, p);
    EXPECT_EQ(r.bins, 4u); // 4 and 1 expected counts merge
    EXPECT_NEAR(r.chi2, 0.0, 1e-12);
    EXPECT_NEAR(r.p, 1.0, 1e-12);
    EXPECT_THROW(chi_square_test({1, 2}, {0.5}), ConfigError);
}

TEST(PoissonGof, ConstantDataIsDegenerate) {
    std::vector<std::uint64_t> c(2000, 2);
    auto g = stats_poisson_gof(c);
    EXPECT_DOUBLE_EQ(g.variance, 0.0);
    EXPECT_LT(g.p, 1e-12);
    EXPECT_THROW(stats_poisson_gof(std::vector<std::uint64_t>(10, 1)), ConfigError);
}

TEST(PoissonGof, SelfTestOnPoissonTwo) {
    int passed = 0;
    const int meta = 100;
    for (int m = 0; m < meta; ++m) {
        Rng rng = Rng::stream(99, std::uint64_t(m));
        std::vector<std::uint64_t> c(100000);
        for (auto& x : c) x = sample_poisson(2.0, rng);
        auto g = stats_poisson_gof(c, 2.0);
        EXPECT_GE(g.dispersion, 0.97);
        EXPECT_LE(g.dispersion, 1.03);
        passed += g.p > 0.01;
    }
    EXPECT_GE(passed, 98 * meta / 100);
}

TEST(PoissonGof, DetectsOverdispersion) {
    Rng rng(5);
    std::vector<std::uint64_t> c(20000);
    for (auto& x : c) x = sample_poisson(rng.uniform() < 0.5 ? 1.0 : 3.0, rng);
    auto g = stats_poisson_gof(c);
    EXPECT_GT(g.dispersion, 1.3);
    EXPECT_LT(g.p, 1e-6);
}

TEST(TvDistance, Extremes) {
    auto same = stats_tv_distance({25, 25, 50}, {0.25, 0.25, 0.5}, 1);
    EXPECT_DOUBLE_EQ(same.value, 0.0);
    auto disjoint = stats_tv_distance({0, 10, 0}, {0.5, 0.0, 0.5}, 1);
    EXPECT_DOUBLE_EQ(disjoint.value, 1.0);
    EXPECT_THROW(stats_tv_distance({1, 2}, {1.0}, 1), ConfigError);
}

TEST(TvDistance, SelfCalibration) {
    std::vector<double> p{0.1, 0.2, 0.3, 0.15, 0.25};
    AliasTable alias(p);
    Rng rng(11);
    std::vector<std::uint64_t> c(p.size(), 0);
    const std::uint64_t n = 100000;
    for (std::uint64_t i = 0; i < n; ++i) ++c[alias.sample(rng)];
    auto tv = stats_tv_distance(c, p, 12);
    // E TV ~ ½ Σ sqrt(2 p (1-p) / (π n))
    double bias = 0;
    for (double q : p) bias += 0.5 * std::sqrt(2 * q * (1 - q) / (M_PI * double(n)));
    EXPECT_GT(tv.se, 0.0);
    EXPECT_LT(std::abs(tv.value - bias), 3 * tv.se + 1e-12);
}

TEST(TvDistance, BootstrapIsSeeded) {
    auto a = stats_tv_distance({10, 20, 30}, {0.2, 0.3, 0.5}, 7);
    auto b = stats_tv_distance({10, 20, 30}, {0.2, 0.3, 0.5}, 7);
    EXPECT_EQ(a.se, b.se);
}
