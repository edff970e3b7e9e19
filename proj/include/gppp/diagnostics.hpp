#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/sampler.hpp"

namespace gppp {

/// Brooks-Gelman multivariate potential scale reduction factor. Chains are
/// truncated to the shortest length n.
inline double mpsrf(const std::vector<Eigen::MatrixXd>& chains) {
    const std::size_t m = chains.size();
    if (m < 2) throw DiagnosticsError("MPSRF needs at least two chains");
    const Eigen::Index K = chains.front().cols();
    Eigen::Index n = chains.front().rows();
    for (const auto& c : chains) {
        if (c.cols() != K) throw DimensionError("chains disagree on dimension");
        n = std::min(n, c.rows());
    }
    if (n < K + 1) throw DiagnosticsError("MPSRF needs n >= K + 1 draws per chain");

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd means(static_cast<Eigen::Index>(m), K);
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::MatrixXd head = chains[i].topRows(n);
        W += sample_covariance(head);
        means.row(static_cast<Eigen::Index>(i)) = head.colwise().mean();
    }
    W /= static_cast<double>(m);
    const Eigen::RowVectorXd grand = means.colwise().mean();
    const Eigen::MatrixXd dev = means.rowwise() - grand;
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    const Eigen::MatrixXd B = (nd / (md - 1.0)) * (dev.transpose() * dev);

    // Largest eigenvalue of W^{-1}B via the symmetric form L^{-1} B L^{-T}.
    const Eigen::MatrixXd Ws = 0.5 * (W + W.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(Ws);
    if (llt.info() != Eigen::Success) throw DiagnosticsError("within-chain covariance W is singular");
    const Eigen::MatrixXd L = llt.matrixL();
    if (!(L.diagonal().array() > 0.0).all()) throw DiagnosticsError("within-chain covariance W is singular");
    const Eigen::MatrixXd Linv_B = L.triangularView<Eigen::Lower>().solve(0.5 * (B + B.transpose()));
    const Eigen::MatrixXd M = L.triangularView<Eigen::Lower>().solve(Linv_B.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
    return std::sqrt((nd - 1.0) / nd + (md + 1.0) / (md * nd) * lmax);
}

/// Biased (1/N) sample autocorrelations up to and including the first
/// non-positive one.
inline std::vector<double> autocorrelations_until_nonpositive(std::span<const double> x) {
    const std::size_t n = x.size();
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(n);
    std::vector<double> c(n);
    double c0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = x[i] - mu;
        c0 += c[i] * c[i];
    }
    std::vector<double> rho;
    if (!(c0 > 0.0)) return rho;
    for (std::size_t lag = 1; lag < n; ++lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
        rho.push_back(s / c0);
        if (!(rho.back() > 0.0)) break;
    }
    return rho;
}

/// N / (1 + sum of autocorrelations before the first non-positive one), capped at N.
inline double effective_sample_size(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 10) throw DiagnosticsError("effective sample size needs at least 10 draws");
    double mu = 0.0;
    for (double v : series) mu += v;
    mu /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : series) ss += (v - mu) * (v - mu);
    if (!(ss > 0.0)) throw DiagnosticsError("effective sample size of a zero-variance series");
    const auto rho = autocorrelations_until_nonpositive(series);
    double sum = 0.0;
    for (double r : rho)
        if (r > 0.0) sum += r;
    return std::min(static_cast<double>(n), static_cast<double>(n) / (1.0 + sum));
}

inline double effective_sample_size(const Eigen::VectorXd& series) {
    return effective_sample_size(std::span<const double>(series.data(), static_cast<std::size_t>(series.size())));
}

inline Eigen::VectorXd effective_sample_sizes(const Eigen::MatrixXd& draws) {
    Eigen::VectorXd out(draws.cols());
    for (Eigen::Index k = 0; k < draws.cols(); ++k) out(k) = effective_sample_size(Eigen::VectorXd(draws.col(k)));
    return out;
}

inline Eigen::VectorXd acceptance_rates(const Chain& chain) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(chain.accept_counts.size()));
    for (std::size_t j = 0; j < chain.accept_counts.size(); ++j) {
        if (chain.proposal_counts[j] == 0) throw DiagnosticsError("coordinate has no recorded proposals");
        r(static_cast<Eigen::Index>(j)) =
            static_cast<double>(chain.accept_counts[j]) / static_cast<double>(chain.proposal_counts[j]);
    }
    return r;
}

/// Pearson correlation of draw columns.
inline Eigen::MatrixXd posterior_correlations(const Eigen::MatrixXd& draws) {
    if (draws.rows() < 2) throw DiagnosticsError("correlations need at least two draws");
    const Eigen::MatrixXd cov = sample_covariance(draws);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    if (!(sd.array() > 0.0).all()) throw DiagnosticsError("zero-variance coordinate in correlation matrix");
    Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    corr.diagonal().setOnes();
    return 0.5 * (corr + corr.transpose());
}

inline Eigen::MatrixXd posterior_correlations(const Chain& chain) { return posterior_correlations(chain.draws); }

struct DiagnosticsReport {
    std::optional<double> mpsrf;          // needs two or more chains
    std::vector<Eigen::VectorXd> ess;              // per chain, per coordinate
    std::vector<std::optional<double>> ess_utility;  // per chain, in-sample utility series
    std::vector<Eigen::VectorXd> acceptance;       // per chain
    Eigen::MatrixXd correlations;         // pooled draws
};

inline DiagnosticsReport diagnose(const std::vector<Chain>& chains) {
    if (chains.empty()) throw DiagnosticsError("no chains to diagnose");
    DiagnosticsReport rep;
    if (chains.size() >= 2) {
        std::vector<Eigen::MatrixXd> draws;
        for (const auto& c : chains) draws.push_back(c.draws);
        rep.mpsrf = mpsrf(draws);
    }
    Eigen::Index total = 0;
    for (const auto& c : chains) {
        rep.ess.push_back(effective_sample_sizes(c.draws));
        std::optional<double> eu;
        if (c.utilities.size() >= 10) {
            try {
                eu = effective_sample_size(c.utilities);
            } catch (const DiagnosticsError&) {
            }
        }
        rep.ess_utility.push_back(eu);
        rep.acceptance.push_back(acceptance_rates(c));
        total += c.size();
    }
    Eigen::MatrixXd pooled(total, chains.front().dim());
    Eigen::Index at = 0;
    for (const auto& c : chains) {
        pooled.middleRows(at, c.size()) = c.draws;
        at += c.size();
    }
    rep.correlations = posterior_correlations(pooled);
    return rep;
}

}  // namespace gppp
