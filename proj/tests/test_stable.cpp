#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gppp/random.hpp"

using namespace gppp;

namespace {

std::vector<double> draws(double alpha, double scale, double loc, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = draw_stable(alpha, scale, loc, rng);
    return out;
}

}  // namespace

TEST(DrawStable, AlphaTwoIsGaussianWithSdScaleRootTwo) {
    const double scale = 0.7, loc = -1.5;
    const auto xs = draws(2.0, scale, loc, 100000, 1);
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= xs.size() - 1;
    const double sd = scale * std::sqrt(2.0);
    EXPECT_LE(std::abs(m - loc), 4.0 * sd / std::sqrt(1e5));
    // var of the sample variance of a normal is 2 sd^4 / n
    EXPECT_LE(std::abs(v - sd * sd), 4.0 * std::sqrt(2.0 / 1e5) * sd * sd);
    // tail mass beyond 2 sd matches the normal 4.55%
    const double tail = std::count_if(xs.begin(), xs.end(), [&](double x) { return std::abs(x - loc) > 2 * sd; }) / 1e5;
    EXPECT_NEAR(tail, 0.0455, 4.0 * std::sqrt(0.0455 * 0.9545 / 1e5));
}

TEST(DrawStable, SymmetricMedian) {
    for (double alpha : {1.2, 1.75, 2.0}) {
        auto xs = draws(alpha, 2.0, 3.0, 100000, 7);
        std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
        EXPECT_LE(std::abs(xs[xs.size() / 2] - 3.0), 4.0 * 2.0 * 1e-2) << alpha;
    }
}

TEST(DrawStable, MeanExistsAtOnePointSevenFive) {
    const auto xs = draws(1.75, 1.0, 5.0, 1000000, 3);
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    EXPECT_NEAR(m, 5.0, 0.05);
}

TEST(DrawStable, CharacteristicFunctionMatches) {
    // Symmetric stable: E cos(t (X - loc)) = exp(-|scale t|^alpha).
    const std::size_t n = 200000;
    for (double alpha : {1.3, 1.75, 2.0}) {
        const double scale = 0.8;
        const auto xs = draws(alpha, scale, 0.0, n, 17);
        for (double t : {0.25, 0.5, 1.0, 2.0}) {
            double c = 0.0;
            for (double x : xs) c += std::cos(t * x);
            c /= n;
            const double expect = std::exp(-std::pow(scale * t, alpha));
            EXPECT_NEAR(c, expect, 4.0 / std::sqrt(2.0 * n)) << "alpha=" << alpha << " t=" << t;
        }
    }
}

TEST(DrawStable, DeterministicGivenState) {
    EXPECT_EQ(draws(1.75, 1.0, 0.0, 1000, 99), draws(1.75, 1.0, 0.0, 1000, 99));
    EXPECT_NE(draws(1.75, 1.0, 0.0, 1000, 99), draws(1.75, 1.0, 0.0, 1000, 100));
}

TEST(DrawStable, RejectsBadParameters) {
    Rng rng(1);
    EXPECT_THROW(draw_stable(1.0, 1.0, 0.0, rng), ConfigError);
    EXPECT_THROW(draw_stable(2.1, 1.0, 0.0, rng), ConfigError);
    EXPECT_THROW(draw_stable(1.75, 0.0, 0.0, rng), ConfigError);
}

TEST(Seeds, LambdaSeedsDifferAndAreStable) {
    EXPECT_EQ(lambda_seed(42, 2500.0), lambda_seed(42, 2500.0));
    EXPECT_NE(lambda_seed(42, 2500.0), lambda_seed(42, 3000.0));
    EXPECT_NE(lambda_seed(42, 2500.0), lambda_seed(43, 2500.0));
}
