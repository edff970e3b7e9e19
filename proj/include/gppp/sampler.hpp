#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/policy.hpp"
#include "gppp/random.hpp"
#include "gppp/stats.hpp"

namespace gppp {

/// Gaussian prior N(mean, covariance) on theta.
struct PriorSpec {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    static PriorSpec standard(Eigen::Index K) {
        return {Eigen::VectorXd::Zero(K), Eigen::MatrixXd::Identity(K, K)};
    }

    Eigen::Index dim() const { return mean.size(); }

    void validate() const {
        if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
            throw DimensionError("prior mean and covariance dimensions disagree");
        if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("prior covariance must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(covariance);
        if (llt.info() != Eigen::Success) throw ConfigError("prior covariance is not positive definite");
    }

    Eigen::MatrixXd precision() const {
        Eigen::LLT<Eigen::MatrixXd> llt(covariance);
        if (llt.info() != Eigen::Success) throw ConfigError("prior covariance is not positive definite");
        return llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    }
};

/// Symmetric stable random-walk proposal, one scale per coordinate.
struct ProposalSpec {
    double alpha = 1.75;
    Eigen::VectorXd scales;

    static ProposalSpec uniform(Eigen::Index K, double scale, double alpha = 1.75) {
        return {alpha, Eigen::VectorXd::Constant(K, scale)};
    }

    void validate(Eigen::Index K) const {
        if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("proposal alpha must lie in (1, 2]");
        if (scales.size() != K) throw DimensionError("proposal needs one scale per coordinate");
        if (!(scales.array() > 0.0).all()) throw ConfigError("proposal scales must be positive");
    }
};

struct SamplerConfig {
    std::size_t burn_in = 20000;
    std::size_t keep = 50000;
};

/// Post-burn-in draws of one Metropolis-within-Gibbs chain. Acceptance
/// counters cover the kept sweeps only.
struct Chain {
    double lambda = 0.0;
    Eigen::MatrixXd draws;        // D x K, one row per full sweep
    Eigen::VectorXd utilities;    // in-sample expected utility at each kept draw
    std::size_t burn_in = 0;
    std::vector<std::uint64_t> accept_counts;
    std::vector<std::uint64_t> proposal_counts;
    std::uint64_t seed = 0;
    ProposalSpec proposal;
    std::string utility;
    std::string window_id;

    Eigen::Index size() const { return draws.rows(); }
    Eigen::Index dim() const { return draws.cols(); }
};

/// Posterior moments and per-coordinate quantiles at the five report levels.
struct PosteriorSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd quantiles;  // K x 5

    Eigen::VectorXd sd() const { return covariance.diagonal().cwiseSqrt(); }
};

/// Mutable walker state: theta plus the cached objective and prior terms.
struct SamplerState {
    Theta theta;
    double utility = 0.0;
    double prior_quad = 0.0;  // (theta - theta0)' Sigma0^{-1} (theta - theta0)
};

inline double prior_quadratic(const Theta& theta, const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision) {
    const Eigen::VectorXd d = theta - mean;
    return d.dot(precision * d);
}

/// Log Metropolis ratio for moving from (u, q) to (u_p, q_p).
inline double log_acceptance_ratio(double lambda, double utility_proposed, double utility_current,
                                   double prior_quad_proposed, double prior_quad_current) {
    const double data_term = lambda == 0.0 ? 0.0 : lambda * (utility_proposed - utility_current);
    return data_term - 0.5 * (prior_quad_proposed - prior_quad_current);
}

/// Precomputed pieces shared by every step of a chain.
struct Target {
    const ExpectedUtility& objective;
    double lambda;
    Eigen::VectorXd prior_mean;
    Eigen::MatrixXd prior_precision;

    Target(const ExpectedUtility& obj, double lam, const PriorSpec& prior)
        : objective(obj), lambda(lam), prior_mean(prior.mean), prior_precision(prior.precision()) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
        prior.validate();
        if (prior.dim() != objective.dim()) throw DimensionError("prior and objective dimensions disagree");
    }

    SamplerState init(const Theta& theta) const {
        SamplerState s{theta, objective(theta), prior_quadratic(theta, prior_mean, prior_precision)};
        if (s.utility == kBankrupt || !std::isfinite(s.utility))
            throw InitializationError("initial state has -infinity in-sample utility");
        return s;
    }
};

/// Metropolis update of a single coordinate given an explicit proposed value.
/// A bankrupt proposal is always rejected.
inline bool metropolis_update(SamplerState& state, Eigen::Index j, double proposed_value, const Target& target,
                              Rng& rng) {
    Theta candidate = state.theta;
    candidate(j) = proposed_value;
    const double u_p = target.objective(candidate);
    if (u_p == kBankrupt || std::isnan(u_p)) return false;
    const double q_p = prior_quadratic(candidate, target.prior_mean, target.prior_precision);
    const double log_rho = log_acceptance_ratio(target.lambda, u_p, state.utility, q_p, state.prior_quad);
    if (log_rho >= 0.0 || std::log(uniform_open(rng)) < log_rho) {
        state.theta = std::move(candidate);
        state.utility = u_p;
        state.prior_quad = q_p;
        return true;
    }
    return false;
}

/// One coordinate step: draw theta_j^p from the stable law centred at theta_j.
inline bool coordinate_step(SamplerState& state, Eigen::Index j, const Target& target,
                            const ProposalSpec& proposal, Rng& rng) {
    const double proposed = draw_stable(proposal.alpha, proposal.scales(j), state.theta(j), rng);
    return metropolis_update(state, j, proposed, target, rng);
}

/// Runs `burn_in + keep` fixed-order sweeps and records theta after each kept
/// sweep. Starts at the prior mean unless `start` is given.
inline Chain run_chain(const ExpectedUtility& objective, double lambda, const PriorSpec& prior,
                       const ProposalSpec& proposal, const SamplerConfig& cfg, std::uint64_t seed,
                       const std::optional<Theta>& start = std::nullopt) {
    if (cfg.keep < 1) throw ConfigError("sampler must keep at least one draw");
    const Target target(objective, lambda, prior);
    const Eigen::Index K = objective.dim();
    proposal.validate(K);

    Rng rng(seed);
    SamplerState state = target.init(start ? *start : prior.mean);

    Chain chain;
    chain.lambda = lambda;
    chain.burn_in = cfg.burn_in;
    chain.seed = seed;
    chain.proposal = proposal;
    chain.utility = objective.utility().name();
    chain.draws.resize(static_cast<Eigen::Index>(cfg.keep), K);
    chain.utilities.resize(static_cast<Eigen::Index>(cfg.keep));
    chain.accept_counts.assign(static_cast<std::size_t>(K), 0);
    chain.proposal_counts.assign(static_cast<std::size_t>(K), 0);

    for (std::size_t it = 0; it < cfg.burn_in; ++it)
        for (Eigen::Index j = 0; j < K; ++j) coordinate_step(state, j, target, proposal, rng);

    for (std::size_t it = 0; it < cfg.keep; ++it) {
        for (Eigen::Index j = 0; j < K; ++j) {
            const bool ok = coordinate_step(state, j, target, proposal, rng);
            ++chain.proposal_counts[static_cast<std::size_t>(j)];
            if (ok) ++chain.accept_counts[static_cast<std::size_t>(j)];
        }
        const auto row = static_cast<Eigen::Index>(it);
        chain.draws.row(row) = state.theta.transpose();
        chain.utilities(row) = state.utility;
    }
    return chain;
}

inline Eigen::VectorXd column_means(const Eigen::MatrixXd& draws) { return draws.colwise().mean().transpose(); }

/// Sample covariance (N-1 divisor) of the rows of `draws`.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& draws) {
    const Eigen::MatrixXd centered = draws.rowwise() - draws.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(draws.rows() - 1);
}

inline PosteriorSummary summarize_draws(const Eigen::MatrixXd& draws) {
    if (draws.rows() < 2) throw DomainError("posterior summary needs at least two draws");
    PosteriorSummary s;
    s.mean = column_means(draws);
    s.covariance = sample_covariance(draws);
    s.quantiles.resize(draws.cols(), 5);
    std::vector<double> col(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index k = 0; k < draws.cols(); ++k) {
        for (Eigen::Index d = 0; d < draws.rows(); ++d) col[static_cast<std::size_t>(d)] = draws(d, k);
        std::sort(col.begin(), col.end());
        for (int q = 0; q < 5; ++q) s.quantiles(k, q) = stats::quantile_sorted(col, stats::kReportLevels[q]);
    }
    return s;
}

inline PosteriorSummary summarize_chain(const Chain& chain) { return summarize_draws(chain.draws); }

struct CalibrationOptions {
    double band_low = 0.35;
    double band_high = 0.6;
    std::size_t pilot_sweeps = 5000;
    std::size_t max_rounds = 20;
};

struct CalibrationResult {
    ProposalSpec proposal;
    bool converged = false;
    std::size_t rounds = 0;
    std::vector<Eigen::VectorXd> rate_history;  // per-round acceptance rates
    std::vector<Eigen::VectorXd> scale_history; // scales used in each round

    const Eigen::VectorXd& last_rates() const { return rate_history.back(); }
};

/// Pilot-run tuning of proposal scales. Each round runs `pilot_sweeps` sweeps
/// continuing from the previous round's state; scale_j is multiplied by
/// exp(rate_j - band centre) until every rate is inside the band, shrunk at
/// each end by two pilot standard errors. The result
/// is meant to be frozen for production chains.
inline CalibrationResult calibrate_scales(const ExpectedUtility& objective, double lambda, const PriorSpec& prior,
                                          const ProposalSpec& initial, const CalibrationOptions& opt,
                                          std::uint64_t seed) {
    if (!(opt.band_low > 0.0 && opt.band_high < 1.0 && opt.band_low < opt.band_high))
        throw ConfigError("acceptance band must satisfy 0 < low < high < 1");
    if (opt.pilot_sweeps < 1 || opt.max_rounds < 1) throw ConfigError("calibration needs pilot sweeps and rounds");
    const Eigen::Index K = objective.dim();
    initial.validate(K);
    const Target target(objective, lambda, prior);
    const double centre = 0.5 * (opt.band_low + opt.band_high);
    // Two binomial standard errors of a pilot rate, so frozen scales stay inside the band.
    const double margin = std::min(2.0 * std::sqrt(0.25 / static_cast<double>(opt.pilot_sweeps)),
                                   0.25 * (opt.band_high - opt.band_low));
    const double lo = opt.band_low + margin, hi = opt.band_high - margin;

    CalibrationResult result;
    result.proposal = initial;
    Rng rng(seed);
    SamplerState state = target.init(prior.mean);

    for (std::size_t round = 0; round < opt.max_rounds; ++round) {
        Eigen::VectorXd accepted = Eigen::VectorXd::Zero(K);
        for (std::size_t it = 0; it < opt.pilot_sweeps; ++it)
            for (Eigen::Index j = 0; j < K; ++j)
                if (coordinate_step(state, j, target, result.proposal, rng)) accepted(j) += 1.0;
        const Eigen::VectorXd rates = accepted / static_cast<double>(opt.pilot_sweeps);
        result.rate_history.push_back(rates);
        result.scale_history.push_back(result.proposal.scales);
        result.rounds = round + 1;
        if ((rates.array() >= lo).all() && (rates.array() <= hi).all()) {
            result.converged = true;
            return result;
        }
        for (Eigen::Index j = 0; j < K; ++j) {
            if (rates(j) < lo || rates(j) > hi)
                result.proposal.scales(j) *= std::exp(rates(j) - centre);
        }
    }
    return result;
}

}  // namespace gppp
