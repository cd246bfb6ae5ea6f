#include "poolcore/errors.hpp"
#include "poolcore/pooling.hpp"
#include "poolcore/rng.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace poolcore;

namespace {

std::vector<double> uniform_vector(std::size_t m, Rng& rng) {
    std::vector<double> v(m);
    for (auto& x : v) x = uniform_open01(rng);
    return v;
}

// Closed-form kinds, evaluated without a null table.
std::vector<MethodSpec> closed_methods(std::size_t m) {
    std::vector<MethodSpec> out{MethodSpec::tippett(), MethodSpec::stouffer(), MethodSpec::fisher(),
                                MethodSpec::pearson(), MethodSpec::gamma(1.0, 1.0), MethodSpec::gamma(0.3, 5.0),
                                MethodSpec::chi(1e-3), MethodSpec::chi(1.0), MethodSpec::chi(50.0)};
    if (m >= 2) out.push_back(MethodSpec::order(2));
    out.push_back(MethodSpec::order(static_cast<int>(m)));
    return out;
}

double ks_statistic(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d = std::max({d, (i + 1.0) / n - xs[i], xs[i] - static_cast<double>(i) / n});
    }
    return d;
}

// Kolmogorov critical value at the 1% level, large-n form.
double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

}  // namespace

TEST(PValues, Validation) {
    EXPECT_THROW(PValues({}), DomainError);
    EXPECT_THROW(PValues({0.5, 1.2}), DomainError);
    EXPECT_THROW(PValues({-0.1}), DomainError);
    EXPECT_THROW(PValues({std::nan("")}), DomainError);
    EXPECT_NO_THROW(PValues({0.0, 1.0}));
}

TEST(MethodSpec, Validation) {
    EXPECT_THROW(MethodSpec::order(3).validate(2), DomainError);
    EXPECT_THROW(MethodSpec::order(0).validate(2), DomainError);
    EXPECT_THROW(MethodSpec::chi(-1.0).validate(2), DomainError);
    EXPECT_THROW(MethodSpec::hr(1.5).validate(2), DomainError);
    EXPECT_THROW(MethodSpec::stouffer({1.0, -1.0}).validate(2), DomainError);
    EXPECT_THROW(MethodSpec::stouffer({1.0, 2.0, 3.0}).validate(2), DomainError);
    EXPECT_NO_THROW(MethodSpec::stouffer({1.0, 2.0}).validate(2));
    EXPECT_EQ(MethodSpec::chi(2.0).key(), "chi(kappa=2)");
    EXPECT_EQ(MethodSpec::hr(0.5).key(), "hr(w=0.5)");
    EXPECT_EQ(MethodSpec::order(3).key(), "order(k=3)");
}

TEST(OrderPool, Examples) {
    EXPECT_NEAR(ord_pool(PValues({0.1, 0.7}), 1), 0.19, 1e-15);
    EXPECT_NEAR(ord_pool(PValues({0.3, 0.5}), 2), 0.25, 1e-15);
    EXPECT_EQ(ord_pool(PValues({0.37}), 1), 0.37);
    EXPECT_THROW(ord_pool(PValues({0.1, 0.2}), 3), DomainError);
}

TEST(OrderPool, MatchesBinomialOracle) {
    Rng rng(1);
    for (std::size_t m : {1u, 2u, 7u, 30u}) {
        for (int rep = 0; rep < 20; ++rep) {
            PValues p(uniform_vector(m, rng));
            std::vector<double> sorted = p.vector();
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t k = 1; k <= m; ++k) {
                const boost::math::binomial dist(static_cast<double>(m), sorted[k - 1]);
                const double ref = boost::math::cdf(boost::math::complement(dist, static_cast<double>(k) - 1.0));
                EXPECT_NEAR(ord_pool(p, static_cast<int>(k)), ref, 1e-13) << m << ' ' << k;
            }
        }
    }
}

TEST(StoufferPool, Examples) {
    for (std::size_t m : {1u, 3u, 40u}) EXPECT_NEAR(stouffer_pool(PValues(std::vector<double>(m, 0.5))), 0.5, 1e-15);
    EXPECT_NEAR(stouffer_pool(PValues({0.025, 0.025})), 0.00279, 5e-6);
    const boost::math::normal n01;
    const double z = 2.0 * boost::math::quantile(n01, 0.975) / std::sqrt(2.0);
    EXPECT_NEAR(stouffer_pool(PValues({0.025, 0.025})), boost::math::cdf(boost::math::complement(n01, z)), 1e-14);
}

TEST(StoufferPool, Weighted) {
    const boost::math::normal n01;
    const std::vector<double> c{1.0, 3.0};
    const double z = (boost::math::quantile(n01, 0.9) + 3.0 * boost::math::quantile(n01, 0.6)) / std::sqrt(10.0);
    EXPECT_NEAR(stouffer_pool(PValues({0.1, 0.4}), c), boost::math::cdf(boost::math::complement(n01, z)), 1e-14);
    EXPECT_THROW(stouffer_pool(PValues({0.1, 0.4}), std::vector<double>{1.0}), DomainError);
}

TEST(FisherPool, Examples) {
    EXPECT_NEAR(fisher_pool(PValues({0.1, 0.1})), 0.056052, 1e-6);
    const double x = -2.0 * std::log(0.01);
    EXPECT_NEAR(fisher_pool(PValues({0.1, 0.1})), std::exp(-x / 2.0) * (1.0 + x / 2.0), 1e-15);
    EXPECT_NEAR(fisher_pool(PValues({0.42})), 0.42, 1e-14);
}

TEST(FisherPool, MatchesChiSquaredOracle) {
    Rng rng(2);
    for (std::size_t m : {2u, 10u, 100u}) {
        const boost::math::chi_squared dist(2.0 * static_cast<double>(m));
        for (int rep = 0; rep < 50; ++rep) {
            PValues p(uniform_vector(m, rng));
            double stat = 0.0;
            for (double v : p.values()) stat -= 2.0 * std::log(v);
            EXPECT_NEAR(fisher_pool(p), boost::math::cdf(boost::math::complement(dist, stat)), 1e-13);
        }
    }
}

TEST(PearsonPool, Examples) {
    EXPECT_NEAR(pearson_pool(PValues({0.9, 0.9})), 0.943948, 1e-6);
    EXPECT_NEAR(pearson_pool(PValues({0.3})), 0.3, 1e-14);
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        const auto v = uniform_vector(5, rng);
        std::vector<double> c(v.size());
        std::transform(v.begin(), v.end(), c.begin(), [](double x) { return 1.0 - x; });
        EXPECT_NEAR(pearson_pool(PValues(v)), 1.0 - fisher_pool(PValues(c)), 1e-12);
    }
}

TEST(GammaPool, Identities) {
    Rng rng(4);
    for (int rep = 0; rep < 200; ++rep) {
        PValues p(uniform_vector(6, rng));
        EXPECT_NEAR(gamma_pool(p, 1.0, 2.0), fisher_pool(p), 1e-12);
        EXPECT_NEAR(gamma_pool(p, 0.7, 1.0), gamma_pool(p, 0.7, 2.0), 1e-12);
        EXPECT_NEAR(gamma_pool(p, 0.7, 1.0), gamma_pool(p, 0.7, 13.0), 1e-12);
    }
    for (double k : {0.01, 1.0, 9.0}) EXPECT_NEAR(gamma_pool(PValues({0.2}), k, 3.0), 0.2, 1e-10);
}

TEST(GammaPool, MatchesGammaOracle) {
    Rng rng(5);
    for (double k : {0.2, 1.0, 4.0}) {
        const boost::math::gamma_distribution<double> one(k, 1.0);
        const boost::math::gamma_distribution<double> sum(4.0 * k, 1.0);
        for (int rep = 0; rep < 30; ++rep) {
            PValues p(uniform_vector(4, rng));
            double stat = 0.0;
            for (double v : p.values()) stat += boost::math::quantile(boost::math::complement(one, v));
            EXPECT_NEAR(gamma_pool(p, k, 1.0), boost::math::cdf(boost::math::complement(sum, stat)), 1e-10);
        }
    }
}

TEST(ChiPool, Identities) {
    Rng rng(6);
    for (int rep = 0; rep < 500; ++rep) {
        PValues p(uniform_vector(5, rng));
        EXPECT_NEAR(chi_pool(p, 2.0), fisher_pool(p), 1e-12);
    }
    EXPECT_EQ(chi_pool(PValues({0.2, 0.5}), 0.0), tippett_pool(PValues({0.2, 0.5})));
    EXPECT_EQ(chi_pool(PValues({0.2, 0.5}), std::numeric_limits<double>::infinity()),
              stouffer_pool(PValues({0.2, 0.5})));
}

TEST(ChiPool, SmallKappaApproachesTippett) {
    Rng rng(7);
    double tip = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        PValues p(uniform_vector(5, rng));
        tip = std::max(tip, std::fabs(chi_pool(p, 0.0035) - tippett_pool(p)));
    }
    EXPECT_LE(tip, 1e-2);
}

TEST(ChiPool, LargeKappaConvergesToStouffer) {
    std::vector<double> worst;
    for (double kappa : {2981.0, 1e4, 1e5, 1e6}) {
        Rng rng(7);
        double w = 0.0;
        for (int rep = 0; rep < 1000; ++rep) {
            PValues p(uniform_vector(5, rng));
            w = std::max(w, std::fabs(chi_pool(p, kappa) - stouffer_pool(p)));
        }
        worst.push_back(w);
    }
    for (std::size_t i = 1; i < worst.size(); ++i) EXPECT_LT(worst[i], worst[i - 1]);
    EXPECT_LE(worst[2], 1e-2);
    EXPECT_LE(worst[3], 2e-3);
}

TEST(ChiPool, MatchesChiSquaredOracleAtLargeKappa) {
    Rng rng(17);
    const boost::math::chi_squared one(2981.0);
    const boost::math::chi_squared sum(5.0 * 2981.0);
    for (int rep = 0; rep < 50; ++rep) {
        PValues p(uniform_vector(5, rng));
        double stat = 0.0;
        for (double v : p.values()) stat += boost::math::quantile(boost::math::complement(one, v));
        EXPECT_NEAR(chi_pool(p, 2981.0), boost::math::cdf(boost::math::complement(sum, stat)), 1e-10);
    }
}

TEST(Sentinels, ZeroAndOne) {
    for (const auto& method : closed_methods(3)) {
        const double with_zero = pool(method, PValues({0.0, 0.4, 0.7}));
        const double with_one = pool(method, PValues({1.0, 1.0, 1.0}));
        EXPECT_EQ(with_one, 1.0) << method.key();
        if (method.kind == MethodKind::pearson || method.kind == MethodKind::order) continue;
        EXPECT_EQ(with_zero, 0.0) << method.key();
        EXPECT_EQ(pool(method, PValues({0.0, 1.0, 0.7})), 0.0) << method.key();
    }
    EXPECT_EQ(stouffer_pool(PValues({1.0, 0.4, 0.7})), 1.0);
    EXPECT_NEAR(chi_pool(PValues({1.0, 0.4, 0.7}), 2.0), fisher_pool(PValues({1.0, 0.4, 0.7})), 1e-12);
    EXPECT_EQ(tippett_pool(PValues({0.0, 0.4})), 0.0);
    EXPECT_EQ(pearson_pool(PValues({1.0, 0.0})), 1.0);
}

TEST(Properties, Symmetry) {
    Rng rng(8);
    std::mt19937 shuffler(8);
    for (const auto& method : closed_methods(7)) {
        for (int rep = 0; rep < 50; ++rep) {
            auto v = uniform_vector(7, rng);
            const double base = pool(method, PValues(v));
            std::shuffle(v.begin(), v.end(), shuffler);
            EXPECT_EQ(pool(method, PValues(v)), base) << method.key();
        }
    }
}

TEST(Properties, MonotoneInEachCoordinate) {
    Rng rng(9);
    for (const auto& method : closed_methods(4)) {
        for (int rep = 0; rep < 100; ++rep) {
            auto v = uniform_vector(4, rng);
            const std::size_t i = rep % 4;
            auto up = v;
            auto down = v;
            up[i] = std::min(1.0, v[i] + 1e-3);
            down[i] = std::max(0.0, v[i] - 1e-3);
            const double mid = pool(method, PValues(v));
            EXPECT_LE(pool(method, PValues(down)), mid + 1e-15) << method.key();
            EXPECT_GE(pool(method, PValues(up)), mid - 1e-15) << method.key();
        }
    }
}

TEST(Properties, SingleTestIdentity) {
    for (double x : {1e-9, 0.013, 0.5, 0.97}) {
        for (const auto& method : closed_methods(1)) {
            EXPECT_NEAR(pool(method, PValues({x})), x, 1e-10) << method.key() << ' ' << x;
        }
    }
}

TEST(Properties, UniformUnderNull) {
    for (std::size_t m : {2u, 5u, 10u}) {
        for (const auto& method : closed_methods(m)) {
            Rng rng(derive_seed(100, {m}));
            std::vector<double> pooled(10000);
            for (auto& x : pooled) x = pool(method, PValues(uniform_vector(m, rng)));
            EXPECT_LT(ks_statistic(pooled), ks_critical_1pct(pooled.size())) << method.key() << " M=" << m;
        }
    }
}

TEST(HrStat, Examples) {
    const std::vector<double> p{0.1, 0.2};
    EXPECT_NEAR(hr_stat(p, 0.5), 0.5 * (std::log(0.1) + std::log(0.2)) - 0.5 * (std::log(0.9) + std::log(0.8)),
                1e-15);
    EXPECT_NEAR(hr_stat(p, 0.5), -1.791759, 1e-6);
    Rng rng(10);
    for (int rep = 0; rep < 100; ++rep) {
        const auto v = uniform_vector(6, rng);
        double fis = 0.0;
        double pea = 0.0;
        for (double x : v) {
            fis -= 2.0 * std::log(x);
            pea -= 2.0 * std::log1p(-x);
        }
        EXPECT_NEAR(hr_stat(v, 1.0), -fis / 2.0, 1e-12);
        EXPECT_NEAR(hr_stat(v, 0.0), pea / 2.0, 1e-12);
        EXPECT_NEAR(hr_stat(v, 0.3), -0.3 * fis / 2.0 + 0.7 * pea / 2.0, 1e-12);
    }
}

TEST(HrStat, Sentinels) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(hr_stat(std::vector<double>{0.0, 0.5}, 0.5), -inf);
    EXPECT_EQ(hr_stat(std::vector<double>{1.0, 0.5}, 0.5), inf);
    EXPECT_EQ(hr_stat(std::vector<double>{0.0, 1.0}, 0.5), -inf);
    EXPECT_TRUE(std::isfinite(hr_stat(std::vector<double>{1.0, 0.5}, 1.0)));
    EXPECT_TRUE(std::isfinite(hr_stat(std::vector<double>{0.0, 0.5}, 0.0)));
    EXPECT_THROW(hr_stat(std::vector<double>{0.5}, 1.1), DomainError);
}

TEST(Pool, HrNeedsTable) { EXPECT_THROW(pool(MethodSpec::hr(0.5), PValues({0.1, 0.2})), DomainError); }
