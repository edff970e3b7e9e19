#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gppp/diagnostics.hpp"
#include "gppp/laplace.hpp"
#include "test_helpers.hpp"

using namespace gppp;

namespace {

/// Brute-force ESS: direct double-loop autocovariances, truncated at the
/// first non-positive autocorrelation.
double brute_force_ess(const std::vector<double>& x) {
    const std::size_t n = x.size();
    long double mu = 0.0L;
    for (double v : x) mu += v;
    mu /= n;
    auto acov = [&](std::size_t lag) {
        long double s = 0.0L;
        for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
        return s / n;
    };
    const long double c0 = acov(0);
    long double sum = 0.0L;
    for (std::size_t lag = 1; lag < n; ++lag) {
        const long double rho = acov(lag) / c0;
        if (rho <= 0.0L) break;
        sum += rho;
    }
    return std::min(static_cast<double>(n), static_cast<double>(n / (1.0L + sum)));
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x(n);
    double v = e(rng) / std::sqrt(1 - phi * phi);
    for (auto& xi : x) {
        xi = v;
        v = phi * v + e(rng);
    }
    return x;
}

Eigen::MatrixXd gaussian_draws(Eigen::Index n, Eigen::Index K, std::uint64_t seed, double shift = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    Eigen::MatrixXd d(n, K);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < K; ++k) d(i, k) = e(rng) + shift;
    return d;
}

}  // namespace

TEST(Mpsrf, IdenticalChains) {
    const Eigen::MatrixXd c = gaussian_draws(1000, 3, 1);
    const double n = 1000.0;
    EXPECT_NEAR(mpsrf({c, c, c}), std::sqrt((n - 1) / n), 1e-14);
}

TEST(Mpsrf, IndependentGaussianChains) {
    const double r = mpsrf({gaussian_draws(50000, 4, 1), gaussian_draws(50000, 4, 2), gaussian_draws(50000, 4, 3)});
    EXPECT_LE(r, 1.01);
    EXPECT_GE(r, std::sqrt(49999.0 / 50000.0));
}

TEST(Mpsrf, ScalarCaseMatchesPsrf) {
    Eigen::MatrixXd a(4, 1), b(4, 1);
    a << 1, 2, 3, 4;
    b << 2, 3, 4, 7;
    // Within variances 5/3 and 14/3 -> W = 19/6; means 2.5, 4 -> B = n * var(means) = 4 * 1.125 = 4.5.
    const double n = 4.0, m = 2.0, W = 19.0 / 6.0, B = 4.5;
    const double expected = std::sqrt((n - 1) / n + (m + 1) / (m * n) * B / W);
    EXPECT_NEAR(mpsrf({a, b}), expected, 1e-14);
}

TEST(Mpsrf, TruncatesAndGuards) {
    const Eigen::MatrixXd a = gaussian_draws(100, 2, 1), b = gaussian_draws(150, 2, 2);
    EXPECT_DOUBLE_EQ(mpsrf({a, b}), mpsrf({a, b.topRows(100)}));
    EXPECT_THROW(mpsrf({a}), DiagnosticsError);
    Eigen::MatrixXd flat = a;
    flat.col(1).setConstant(1.0);
    EXPECT_THROW(mpsrf({flat, flat}), DiagnosticsError);
}

TEST(Mpsrf, LowerBoundProperty) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::MatrixXd> chains;
        for (int c = 0; c < 3; ++c) chains.push_back(gaussian_draws(200, 3, rng(), 0.1 * c * (trial % 3)));
        EXPECT_GE(mpsrf(chains), std::sqrt(199.0 / 200.0) - 1e-15);
    }
}

TEST(Ess, AlternatingSeriesCappedAtN) {
    std::vector<double> x;
    for (int i = 0; i < 100; ++i) x.push_back(i % 2 ? -1.0 : 1.0);
    EXPECT_DOUBLE_EQ(effective_sample_size(x), 100.0);
}

TEST(Ess, Ar1MatchesBruteForce) {
    const auto x = ar1(100000, 0.5, 7);
    const double ess = effective_sample_size(x);
    const double oracle = brute_force_ess(x);
    EXPECT_NEAR(ess / x.size(), oracle / x.size(), 0.05);
    EXPECT_NEAR(ess, oracle, 1e-6 * oracle);
    // One-sided sum for phi = 0.5: sum rho = phi / (1 - phi) = 1.
    EXPECT_NEAR(ess / x.size(), 0.5, 0.05);
}

TEST(Ess, IidNearN) {
    const auto x = ar1(100000, 0.0, 9);
    EXPECT_GE(effective_sample_size(x), 0.9 * x.size());
}

TEST(Ess, AffineInvarianceAndBounds) {
    auto x = ar1(5000, 0.8, 2);
    const double base = effective_sample_size(x);
    EXPECT_LE(base, 5000.0);
    for (auto& v : x) v = -3.0 * v + 11.0;
    EXPECT_NEAR(effective_sample_size(x), base, 1e-6 * base);
    EXPECT_THROW(effective_sample_size(std::vector<double>(20, 1.0)), DiagnosticsError);
    EXPECT_THROW(effective_sample_size(std::vector<double>(5, 1.0)), DiagnosticsError);
}

TEST(AcceptanceRates, Examples) {
    Chain c;
    c.draws = Eigen::MatrixXd::Zero(100, 3);
    c.accept_counts = {100, 0, 44};
    c.proposal_counts = {100, 100, 100};
    const auto r = acceptance_rates(c);
    EXPECT_DOUBLE_EQ(r(0), 1.0);
    EXPECT_DOUBLE_EQ(r(1), 0.0);
    EXPECT_DOUBLE_EQ(r(2), 0.44);
}

TEST(PosteriorCorrelations, Examples) {
    Eigen::MatrixXd d = gaussian_draws(100000, 4, 5);
    auto R = posterior_correlations(d);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(R(i, i), 1.0, 1e-12);
        for (int j = 0; j < 4; ++j)
            if (i != j) EXPECT_NEAR(R(i, j), 0.0, 0.02);
    }
    d.col(2) = d.col(0);
    d.col(3) = -d.col(1);
    R = posterior_correlations(d);
    EXPECT_NEAR(R(0, 2), 1.0, 1e-12);
    EXPECT_NEAR(R(1, 3), -1.0, 1e-12);
    EXPECT_TRUE(R.isApprox(R.transpose(), 0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
    d.col(1).setConstant(2.0);
    EXPECT_THROW(posterior_correlations(d), DiagnosticsError);
}

TEST(Diagnose, QuadraticOracleChainsConverge) {
    std::mt19937_64 rng(2);
    const auto model = QuadraticModel::from_moments(Eigen::Vector3d(0.1, 0.0, -0.1), testutil::random_spd(3, rng), 3.0);
    const ExpectedUtility obj({}, model.utility());
    std::vector<Chain> chains;
    for (std::uint64_t s = 1; s <= 3; ++s)
        chains.push_back(run_chain(obj, 1.0, PriorSpec::standard(3), ProposalSpec::uniform(3, 0.6), {2000, 20000}, s));
    const auto rep = diagnose(chains);
    ASSERT_TRUE(rep.mpsrf.has_value());
    EXPECT_LE(*rep.mpsrf, 1.01);
    EXPECT_EQ(rep.ess.size(), 3u);
    for (const auto& a : rep.acceptance) EXPECT_TRUE((a.array() >= 0).all() && (a.array() <= 1).all());
    EXPECT_EQ(rep.correlations.rows(), 3);
    const auto one = diagnose({chains[0]});
    EXPECT_FALSE(one.mpsrf.has_value());
}
