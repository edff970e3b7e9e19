#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gppp/diagnostics.hpp"
#include "gppp/laplace.hpp"
#include "test_helpers.hpp"

using namespace gppp;

TEST(QuadraticPosterior, Examples) {
    const Eigen::Vector2d th(1.0, -2.0);
    const auto I = Eigen::MatrixXd::Identity(2, 2);
    auto p = quadratic_posterior(th, I, PriorSpec::standard(2), 1.0);
    EXPECT_TRUE(p.covariance.isApprox(0.5 * I, 1e-14));
    EXPECT_TRUE(p.mean.isApprox(th / 2, 1e-14));
    PriorSpec prior{Eigen::Vector2d(0.3, 0.1), Eigen::Matrix2d(Eigen::Vector2d(2, 3).asDiagonal())};
    p = quadratic_posterior(th, I, prior, 0.0);
    EXPECT_TRUE(p.mean.isApprox(prior.mean, 1e-14));
    EXPECT_TRUE(p.covariance.isApprox(prior.covariance, 1e-14));
    p = quadratic_posterior(th, I, PriorSpec::standard(2), 1e8);
    EXPECT_LT((p.mean - th).cwiseAbs().maxCoeff(), 1e-6);
    Eigen::Matrix2d bad;
    bad << 1, 0, 0, -1;
    EXPECT_THROW(quadratic_posterior(th, bad, PriorSpec::standard(2), 1.0), DomainError);
}

TEST(MvPosterior, TauInvariance) {
    std::mt19937_64 rng(1);
    const auto Q = testutil::random_spd(3, rng);
    const Eigen::Vector3d g(0.1, 0.2, -0.1);
    // Same theta_hat for both: the posterior depends on (lambda, gamma) only via gamma * lambda.
    auto a = QuadraticModel::from_moments(g, Q, 3.0);
    auto b = a;
    b.gamma = 1.0;
    const auto pa = mv_posterior(a, 2.0, PriorSpec::standard(3));
    const auto pb = mv_posterior(b, 6.0, PriorSpec::standard(3));
    EXPECT_TRUE(pa.mean.isApprox(pb.mean, 1e-12));
    EXPECT_TRUE(pa.covariance.isApprox(pb.covariance, 1e-12));

    QuadraticModel k1{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Identity(1, 1), 1.0, Eigen::VectorXd::Constant(1, 0.8)};
    const auto p1 = mv_posterior(k1, 1.0, PriorSpec::standard(1));
    EXPECT_NEAR(p1.covariance(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(p1.mean(0), 0.4, 1e-15);
}

TEST(MvPosterior, LogDetIdentity) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto Q = testutil::random_spd(6, rng, 0.1, 5.0);
        const auto m = QuadraticModel::from_moments(Eigen::VectorXd::Constant(6, 0.01), Q, 3.0);
        const double lambda = 1000.0 * (trial + 1);
        const auto p = mv_posterior(m, lambda, PriorSpec::standard(6));
        const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(6, 6) + lambda * m.gamma * Q;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        const double rhs = es.eigenvalues().array().log().sum();
        EXPECT_NEAR(-log_det_spd(p.covariance), rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
    }
}

TEST(EntropyKl, Examples) {
    auto r = gaussian_entropy_kl(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    EXPECT_NEAR(r.kl, 0.0, 1e-15);
    EXPECT_NEAR(r.entropy_reduction, 0.0, 1e-15);
    r = gaussian_entropy_kl(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.5));
    EXPECT_NEAR(r.kl, 0.5 * (0.5 - 1.0 - std::log(0.5)), 1e-15);
    EXPECT_NEAR(r.kl, 0.09657, 1e-5);
    for (double c : {0.3, 2.0, 7.5}) {
        const auto a = gaussian_entropy_kl(Eigen::VectorXd::Zero(4), c * Eigen::MatrixXd::Identity(4, 4));
        const auto b = gaussian_entropy_kl(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));
        EXPECT_NEAR(a.entropy - b.entropy, 2.0 * std::log(c), 1e-13);
    }
    EXPECT_THROW(gaussian_entropy_kl(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, -1.0)), DomainError);
}

TEST(EntropyKl, KlNonDecreasingInLambda) {
    std::mt19937_64 rng(3);
    const auto m = QuadraticModel::from_moments(Eigen::Vector3d(0.01, -0.02, 0.005), testutil::random_spd(3, rng, 1e-3, 1e-2), 3.0);
    double prev = 0.0;
    for (double lam : default_lambda_grid()) {
        const auto p = mv_posterior(m, lam, PriorSpec::standard(3));
        const double kl = gaussian_entropy_kl(p.mean, p.covariance).kl;
        EXPECT_GE(kl, prev - 1e-12) << lam;
        prev = kl;
    }
}

TEST(CeQuadratic, Examples) {
    std::mt19937_64 rng(4);
    const auto Q = testutil::random_spd(3, rng);
    const auto zero = QuadraticModel::from_moments(Eigen::Vector3d::Zero(), Q, 2.0);
    const auto p = mv_posterior(zero, 5.0, PriorSpec::standard(3));
    EXPECT_LT(p.mean.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(ce_quadratic(zero, 5.0, PriorSpec::standard(3)), -1.0 * (Q * p.covariance).trace(), 1e-14);
    EXPECT_NEAR(ce_quadratic(zero, 0.0, PriorSpec::standard(3)), -1.0 * Q.trace(), 1e-14);
    EXPECT_LT(ce_quadratic(zero, 5.0, PriorSpec::standard(3)), 0.0);

    QuadraticModel hand{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Identity(1, 1), 1.0, Eigen::VectorXd::Constant(1, 1.0)};
    EXPECT_NEAR(ce_quadratic(hand, 1.0, PriorSpec::standard(1)), 0.125, 1e-15);
}

TEST(TauStar, ConsistentAcrossRiskAversion) {
    std::vector<double> tau_grid;
    for (double lam : default_lambda_grid()) tau_grid.push_back(lam * 3e-3);
    std::mt19937_64 rng(5);
    const auto base = QuadraticModel::from_moments(Eigen::VectorXd::Constant(4, 0.01), testutil::random_spd(4, rng, 0.01, 10.0), 1.0);
    auto r = tau_star_check(base, tau_grid, 2.0, 4.0, PriorSpec::standard(4));
    EXPECT_TRUE(r.consistent);
    EXPECT_DOUBLE_EQ(r.tau_star_a, r.tau_star_b);
    EXPECT_NEAR(r.lambda_star_a, 2.0 * r.lambda_star_b, 1e-12 * r.lambda_star_a);
    r = tau_star_check(base, tau_grid, 1.0, 1.0, PriorSpec::standard(4));
    EXPECT_TRUE(r.consistent);
    EXPECT_EQ(r.lambda_star_a, r.lambda_star_b);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = QuadraticModel::from_moments(Eigen::VectorXd::Constant(5, 0.01), testutil::random_spd(5, rng, 0.001, 10.0), 1.0);
        EXPECT_TRUE(tau_star_check(m, tau_grid, 1.5, 6.0, PriorSpec::standard(5)).consistent) << trial;
    }
    EXPECT_THROW(tau_star_check(base, {1, 2}, 1.0, 2.0, PriorSpec::standard(4)), ConfigError);
}

TEST(SamplerAgreement, MomentsWithinMonteCarloError) {
    std::mt19937_64 rng(6);
    const auto m = QuadraticModel::from_moments(Eigen::Vector4d(0.3, -0.2, 0.1, 0.0), testutil::random_spd(4, rng), 2.0);
    const double lambda = 1.5;
    const auto exact = mv_posterior(m, lambda, PriorSpec::standard(4));
    const ExpectedUtility obj({}, m.utility());
    const auto cal = calibrate_scales(obj, lambda, PriorSpec::standard(4), ProposalSpec::uniform(4, 0.5), {}, 3);
    const Chain c = run_chain(obj, lambda, PriorSpec::standard(4), cal.proposal, {5000, 50000}, 4);
    const auto s = summarize_chain(c);
    const auto ess = effective_sample_sizes(c.draws);
    const auto& S = exact.covariance;
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(s.mean(i), exact.mean(i), 3.0 * std::sqrt(S(i, i) / ess(i)));
        for (int j = 0; j <= i; ++j) {
            const double se = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / std::min(ess(i), ess(j)));
            EXPECT_NEAR(s.covariance(i, j), S(i, j), 3.0 * se);
        }
    }
}
