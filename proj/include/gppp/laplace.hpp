#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/frontier.hpp"
#include "gppp/sampler.hpp"

namespace gppp {

/// Mean-variance approximation of the in-sample objective: g is the
/// characteristic-projected mean, Q the projected covariance.
struct QuadraticModel {
    Eigen::VectorXd g;
    Eigen::MatrixXd Q;
    double gamma = 1.0;
    Eigen::VectorXd theta_hat;

    /// Builds the model with theta_hat = Q^{-1} g / gamma.
    static QuadraticModel from_moments(Eigen::VectorXd g, Eigen::MatrixXd Q, double gamma) {
        QuadraticModel m{std::move(g), std::move(Q), gamma, {}};
        m.theta_hat = m.Q.ldlt().solve(m.g) / gamma;
        return m;
    }

    UtilitySpec utility() const { return UtilitySpec::quadratic(g, Q, gamma); }
};

struct GaussianPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

inline bool is_spd(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) return false;
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff())) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (A + A.transpose()));
    return llt.info() == Eigen::Success;
}

/// Laplace posterior: Sigma = (Sigma0^{-1} + lambda H)^{-1},
/// mean = Sigma (Sigma0^{-1} theta0 + lambda H theta_hat).
inline GaussianPosterior quadratic_posterior(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& H,
                                             const PriorSpec& prior, double lambda) {
    if (!is_spd(H)) throw DomainError("curvature matrix H must be symmetric positive definite");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (H.rows() != prior.dim() || theta_hat.size() != prior.dim())
        throw DimensionError("curvature, mode and prior dimensions disagree");
    const Eigen::MatrixXd P0 = prior.precision();
    const Eigen::MatrixXd precision = P0 + lambda * H;
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (precision + precision.transpose()));
    const auto K = prior.dim();
    GaussianPosterior post;
    post.covariance = llt.solve(Eigen::MatrixXd::Identity(K, K));
    post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
    post.mean = llt.solve(P0 * prior.mean + lambda * (H * theta_hat));
    return post;
}

/// Mean-variance case: H = gamma Q, so the posterior depends on tau = gamma lambda only.
inline GaussianPosterior mv_posterior(const QuadraticModel& model, double lambda, const PriorSpec& prior) {
    return quadratic_posterior(model.theta_hat, model.gamma * model.Q, prior, lambda);
}

struct EntropyKl {
    double entropy;
    double entropy_reduction;  // h(prior) - h(posterior) against N(0, I)
    double kl;                 // KL(posterior || N(0, I))
};

inline EntropyKl gaussian_entropy_kl(const Eigen::VectorXd& mean, const Eigen::MatrixXd& sigma) {
    if (!is_spd(sigma)) throw DomainError("covariance must be symmetric positive definite");
    const auto K = static_cast<double>(sigma.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (sigma + sigma.transpose()));
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    EntropyKl out;
    out.entropy = 0.5 * (K * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det);
    out.entropy_reduction = -0.5 * log_det;
    out.kl = 0.5 * (sigma.trace() + mean.squaredNorm() - K - log_det);
    return out;
}

inline double log_det_spd(const Eigen::MatrixXd& A) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (A + A.transpose()));
    if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// Posterior certainty equivalent under the mean-variance model:
/// g'mean - (gamma/2)(mean'Q mean + tr(Q Sigma)).
inline double ce_quadratic(const QuadraticModel& model, double lambda, const PriorSpec& prior) {
    const auto post = mv_posterior(model, lambda, prior);
    return model.g.dot(post.mean) -
           0.5 * model.gamma * (post.mean.dot(model.Q * post.mean) + (model.Q * post.covariance).trace());
}

/// Analytic frontier on a lambda grid for the mean-variance model.
inline Frontier analytic_frontier(const QuadraticModel& model, const std::vector<double>& grid,
                                  const PriorSpec& prior) {
    std::vector<Eigen::MatrixXd> covs;
    for (double lam : grid) covs.push_back(mv_posterior(model, lam, prior).covariance);
    return build_frontier(grid, covs);
}

struct TauStarReport {
    double gamma_a = 0.0, gamma_b = 0.0;
    double lambda_star_a = 0.0, lambda_star_b = 0.0;
    double tau_star_a = 0.0, tau_star_b = 0.0;
    std::size_t index_a = 0, index_b = 0;
    bool consistent = false;
};

/// Runs the analytic frontier for two risk aversions on the grids tau/gamma
/// and checks that both select the same tau* = gamma lambda*.
inline TauStarReport tau_star_check(const QuadraticModel& model, const std::vector<double>& tau_grid,
                                    double gamma_a, double gamma_b, const PriorSpec& prior) {
    if (tau_grid.size() < 3) throw ConfigError("tau grid needs at least three points");
    auto run = [&](double gamma, double& lam_star, double& tau_star, std::size_t& idx) {
        QuadraticModel m = QuadraticModel::from_moments(model.g, model.Q, gamma);
        std::vector<double> grid;
        for (double tau : tau_grid) grid.push_back(tau / gamma);
        const Frontier f = analytic_frontier(m, grid, prior);
        lam_star = f.selection.lambda_star;
        idx = f.selection.index;
        tau_star = tau_grid[idx];
    };
    TauStarReport r;
    r.gamma_a = gamma_a;
    r.gamma_b = gamma_b;
    run(gamma_a, r.lambda_star_a, r.tau_star_a, r.index_a);
    run(gamma_b, r.lambda_star_b, r.tau_star_b, r.index_b);
    r.consistent = r.index_a == r.index_b;
    return r;
}

}  // namespace gppp
