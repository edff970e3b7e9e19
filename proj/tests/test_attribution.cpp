#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gppp/attribution.hpp"

using namespace gppp;

namespace {

Eigen::MatrixXd noise(Eigen::Index M, Eigen::Index F, std::mt19937_64& rng, double sd = 0.04) {
    std::normal_distribution<double> n(0.0, sd);
    Eigen::MatrixXd X(M, F);
    for (Eigen::Index i = 0; i < M; ++i)
        for (Eigen::Index j = 0; j < F; ++j) X(i, j) = n(rng);
    return X;
}

/// White's heteroskedasticity-robust covariance, written out term by term.
Eigen::MatrixXd sandwich_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& F) {
    const Eigen::Index M = y.size(), P = F.cols() + 1;
    Eigen::MatrixXd X(M, P);
    X << Eigen::VectorXd::Ones(M), F;
    const Eigen::MatrixXd XtX_inv = (X.transpose() * X).inverse();
    const Eigen::VectorXd b = XtX_inv * X.transpose() * y;
    const Eigen::VectorXd e = y - X * b;
    Eigen::MatrixXd meat = X.transpose() * e.array().square().matrix().asDiagonal() * X;
    return XtX_inv * meat * XtX_inv;
}

}  // namespace

TEST(Ols, ExactSingleFactor) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd F = noise(60, 3, rng);
    const auto fit = ols_fit(F.col(1), F);
    EXPECT_NEAR(fit.alpha(), 0.0, 1e-12);
    EXPECT_NEAR(fit.betas()(0), 0.0, 1e-12);
    EXPECT_NEAR(fit.betas()(1), 1.0, 1e-12);
    EXPECT_NEAR(fit.betas()(2), 0.0, 1e-12);
    const auto sh = variance_shares(fit);
    EXPECT_NEAR(sh(2), 1.0, 1e-10);
    EXPECT_NEAR(sh(0), 0.0, 1e-10);
    for (auto t : hac_tstats(fit, 3)) EXPECT_FALSE(t.has_value());
}

TEST(Ols, ConstantReturnsGiveAlpha) {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd F = noise(2000, 2, rng);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(2000, 0.02) + noise(2000, 1, rng, 0.01);
    const auto fit = ols_fit(y, F);
    EXPECT_NEAR(fit.alpha(), 0.02, 4.0 * 0.01 / std::sqrt(2000.0));
    EXPECT_NEAR(fit.betas()(0), 0.0, 4.0 * 0.25 / std::sqrt(2000.0));
}

TEST(Ols, HandThreeObservations) {
    Eigen::VectorXd y(3), f(3);
    y << 1, 2, 4;
    f << 0, 1, 2;
    // Normal equations: slope = Sxy / Sxx = 3 / 2, intercept = 7/3 - 1.5 = 5/6.
    const auto fit = ols_fit(y, f);
    EXPECT_NEAR(fit.betas()(0), 1.5, 1e-14);
    EXPECT_NEAR(fit.alpha(), 5.0 / 6.0, 1e-14);
    EXPECT_THROW(ols_fit(y.head(2), Eigen::MatrixXd(f.head(2))), NumericError);
    Eigen::MatrixXd dup(3, 2);
    dup << f, f;
    Eigen::VectorXd y4(4);
    y4 << 1, 2, 4, 3;
    Eigen::MatrixXd dup4(4, 2);
    dup4 << 0, 0, 1, 1, 2, 2, 3, 3;
    EXPECT_THROW(ols_fit(y4, dup4), NumericError);
}

TEST(Ols, ResidualsOrthogonal) {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd F = noise(120, 6, rng);
    const Eigen::VectorXd y = F * Eigen::VectorXd::LinSpaced(6, -1, 1) + noise(120, 1, rng, 0.02);
    const auto fit = ols_fit(y, F);
    EXPECT_LE((fit.design.transpose() * fit.residuals).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, y.norm()));
}

TEST(Hac, LagZeroMatchesSandwichOracle) {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd F = noise(80, 2, rng);
    Eigen::VectorXd y = 0.01 + 0.5 * F.col(0).array();
    y += noise(80, 1, rng, 0.02).cwiseProduct((F.col(1).array().abs() * 30.0 + 0.1).matrix());
    const auto fit = ols_fit(y, F);
    const Eigen::MatrixXd V = hac_covariance(fit, 0);
    const Eigen::MatrixXd oracle = sandwich_oracle(y, F);
    EXPECT_TRUE(V.isApprox(oracle, 1e-9));
    const auto t = hac_tstats(fit, 0);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(*t[i], fit.coefficients(i) / std::sqrt(oracle(i, i)), 1e-9);
}

TEST(Hac, BartlettLagOneByHand) {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd F = noise(30, 1, rng);
    const Eigen::VectorXd y = noise(30, 1, rng, 0.02);
    const auto fit = ols_fit(y, F);
    const auto& X = fit.design;
    const auto& e = fit.residuals;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2, 2);
    for (int t = 0; t < 30; ++t) S += e(t) * e(t) * X.row(t).transpose() * X.row(t);
    for (int t = 1; t < 30; ++t) {
        const Eigen::MatrixXd G = e(t) * e(t - 1) * X.row(t).transpose() * X.row(t - 1);
        S += 0.5 * (G + G.transpose());
    }
    const Eigen::MatrixXd B = (X.transpose() * X).inverse();
    EXPECT_TRUE(hac_covariance(fit, 1).isApprox(B * S * B, 1e-10));
    EXPECT_EQ(default_hac_lag(100), 4u);
    EXPECT_EQ(default_hac_lag(12), 2u);
}

TEST(Hac, SizeUnderNull) {
    std::mt19937_64 rng(6);
    int inside = 0;
    for (int sim = 0; sim < 1000; ++sim) {
        const Eigen::MatrixXd F = noise(120, 3, rng);
        const Eigen::VectorXd y = noise(120, 1, rng, 0.03);
        const auto t = hac_tstats(ols_fit(y, F), default_hac_lag(120));
        bool ok = true;
        for (int i = 1; i < 4; ++i) ok = ok && std::abs(*t[i]) < 3.0;
        inside += ok;
    }
    // Each of three betas: |t| < 3 jointly in at least 99% of simulations would be
    // too strict for a joint test; check each coefficient separately below.
    EXPECT_GE(inside, 970);
    int single = 0;
    for (int sim = 0; sim < 1000; ++sim) {
        const Eigen::MatrixXd F = noise(120, 1, rng);
        const Eigen::VectorXd y = noise(120, 1, rng, 0.03);
        single += std::abs(*hac_tstats(ols_fit(y, F), default_hac_lag(120))[1]) < 3.0;
    }
    EXPECT_GE(single, 990);
}

TEST(VarianceShares, OrthogonalFactorsSumToOne) {
    std::mt19937_64 rng(7);
    Eigen::MatrixXd F = noise(240, 3, rng);
    // Orthogonalize the centred design.
    F = F.rowwise() - F.colwise().mean();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(F);
    F = Eigen::MatrixXd(qr.householderQ()).leftCols(3) * 0.5;
    const Eigen::VectorXd y = F * Eigen::Vector3d(0.8, -0.4, 0.2) + noise(240, 1, rng, 0.01);
    const auto sh = variance_shares(ols_fit(y, F));
    EXPECT_NEAR(sh.sum(), 1.0, 1e-2);
    EXPECT_TRUE((sh.array() >= 0.0).all());
}

TEST(VarianceShares, ZeroBetasAllResidual) {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd F = noise(50, 1, rng);
    F = F.array() - F.mean();
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y(i) = (i % 2 ? 1.0 : -1.0);
    // Make y exactly orthogonal to the factor.
    y -= F.col(0) * (F.col(0).dot(y) / F.col(0).squaredNorm());
    y = y.array() - y.mean();
    const auto sh = variance_shares(ols_fit(y, F));
    EXPECT_NEAR(sh(0), 1.0, 1e-12);
    EXPECT_NEAR(sh(1), 0.0, 1e-12);
    EXPECT_THROW(variance_shares(ols_fit(Eigen::VectorXd::Constant(50, 0.3), F)), NumericError);
}

TEST(PosteriorAttribution, LinearityAndDegenerateCases) {
    std::mt19937_64 rng(9);
    FactorPanel fp;
    fp.names = {"mkt", "smb"};
    fp.returns = noise(36, 2, rng);
    fp.risk_free = Eigen::VectorXd::Constant(36, 0.001);
    for (int i = 0; i < 36; ++i) fp.months.push_back(std::to_string(i));
    Eigen::MatrixXd paths(50, 36);
    for (int d = 0; d < 50; ++d) paths.row(d) = (fp.returns * Eigen::Vector2d(1.0 + 0.01 * d, 0.2) + noise(36, 1, rng, 0.01)).transpose();
    const Eigen::VectorXd mean_path = paths.colwise().mean().transpose();
    const auto att = posterior_attribution(paths, fp, std::nullopt, mean_path);
    ASSERT_TRUE(att.decision_fit.has_value());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(*att.coefficients[i].mean, att.decision_fit->coefficients(i), 1e-9);
    EXPECT_EQ(att.coefficient_names[0], "alpha");
    EXPECT_EQ(att.share_names[0], "residual");

    Eigen::MatrixXd same(4, 36);
    same.rowwise() = paths.row(0);
    const auto s = posterior_attribution(same, fp);
    for (const auto& c : s.coefficients) EXPECT_NEAR(*c.sd, 0.0, 1e-12);

    const auto two = posterior_attribution(paths.topRows(2), fp);
    const double a0 = ols_fit(paths.row(0).transpose() - fp.risk_free, fp.returns).coefficients(1);
    const double a1 = ols_fit(paths.row(1).transpose() - fp.risk_free, fp.returns).coefficients(1);
    EXPECT_NEAR(*two.coefficients[1].quantiles[0], std::min(a0, a1) + 0.025 * std::abs(a1 - a0), 1e-12);
    EXPECT_THROW(posterior_attribution(paths.topRows(1), fp), DomainError);
}

TEST(FactorCsv, ParsingAndSelection) {
    const auto fp = parse_factor_csv("month,rf,mkt,hml\n2000-01,0.001,0.02,-0.01\n2000-02,0.002,0.01,0.03\n");
    EXPECT_EQ(fp.names, (std::vector<std::string>{"mkt", "hml"}));
    EXPECT_DOUBLE_EQ(fp.returns(1, 1), 0.03);
    const auto sel = fp.select({"2000-02"});
    EXPECT_DOUBLE_EQ(sel.risk_free(0), 0.002);
    EXPECT_THROW(fp.select({"1999-12"}), DataError);
    EXPECT_THROW(parse_factor_csv("date,rf,mkt\n"), SchemaError);
    try {
        parse_factor_csv("month,rf,mkt\n2000-01,0.1,0.2\n2000-02,x,0.1\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    }
    EXPECT_THROW(load_factor_csv("/nonexistent/factors.csv"), ConfigError);
}
