#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/parallel.hpp"
#include "gppp/random.hpp"
#include "gppp/sampler.hpp"

namespace gppp {

/// One grid point of the identification frontier.
struct FrontierPoint {
    double lambda = 0.0;
    double kappa = 1.0;
    double log_kappa = 0.0;
    double neg_log_det = 0.0;
    double deceleration = 0.0;
    double kneedle_score = 0.0;
};

struct CovarianceGeometry {
    double kappa;
    double neg_log_det;
};

/// Condition number and -log det of a covariance matrix.
inline CovarianceGeometry covariance_geometry(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw DimensionError("covariance must be square");
    const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
        throw DimensionError("covariance is not symmetric");
    const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-14)) throw SingularCovarianceError("covariance is singular (min eigenvalue <= 1e-14)");
    return {ev.maxCoeff() / ev.minCoeff(), -ev.array().log().sum()};
}

/// OLS slope of y on x.
inline double frontier_slope(const std::vector<std::pair<double, double>>& xy) {
    if (xy.size() < 2) throw FlatFrontierError("frontier slope needs at least two points");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : xy) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(xy.size());
    my /= static_cast<double>(xy.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : xy) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0)) throw FlatFrontierError("degenerate projection: all log condition numbers are equal");
    return sxy / sxx;
}

inline double information_deceleration(double m, double kappa) { return -m / (kappa * kappa); }

struct KneedleResult {
    double lambda_star = 0.0;
    std::size_t index = 0;
    std::vector<double> scores;
};

/// Perpendicular-distance knee: min-max normalise kappa and deceleration,
/// take argmax |d1 - d2| / sqrt(2). Ties go to the smaller lambda.
inline KneedleResult kneedle_select(const std::vector<FrontierPoint>& points) {
    if (points.size() < 3) throw FlatFrontierError("knee selection needs at least three grid points");
    double kmin = points[0].kappa, kmax = kmin, dmin = points[0].deceleration, dmax = dmin;
    for (const auto& p : points) {
        kmin = std::min(kmin, p.kappa);
        kmax = std::max(kmax, p.kappa);
        dmin = std::min(dmin, p.deceleration);
        dmax = std::max(dmax, p.deceleration);
    }
    if (!(kmax > kmin)) throw FlatFrontierError("condition number is constant across the grid");
    if (!(dmax > dmin)) throw FlatFrontierError("information deceleration is constant across the grid");

    KneedleResult r;
    r.scores.reserve(points.size());
    double best = -1.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const double d1 = (points[j].kappa - kmin) / (kmax - kmin);
        const double d2 = (points[j].deceleration - dmin) / (dmax - dmin);
        const double score = std::abs(d1 - d2) / std::numbers::sqrt2;
        r.scores.push_back(score);
        const double tol = 1e-12 * std::max(1.0, best);
        const bool better = score > best + tol;
        const bool tie = std::abs(score - best) <= tol && points[j].lambda < points[r.index].lambda;
        if (better || tie) {
            best = std::max(best, score);
            r.index = j;
        }
    }
    r.lambda_star = points[r.index].lambda;
    return r;
}

struct Frontier {
    std::vector<FrontierPoint> points;
    double slope = 0.0;
    KneedleResult selection;
};

/// Frontier from posterior covariances on a lambda grid: geometry per point,
/// one global slope, deceleration per point, then the knee.
inline Frontier build_frontier(const std::vector<double>& lambdas, const std::vector<Eigen::MatrixXd>& covariances) {
    if (lambdas.size() != covariances.size()) throw DimensionError("one covariance per lambda required");
    Frontier f;
    std::vector<std::pair<double, double>> xy;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        const auto g = covariance_geometry(covariances[j]);
        FrontierPoint p;
        p.lambda = lambdas[j];
        p.kappa = g.kappa;
        p.log_kappa = std::log(g.kappa);
        p.neg_log_det = g.neg_log_det;
        f.points.push_back(p);
        xy.emplace_back(p.log_kappa, p.neg_log_det);
    }
    f.slope = frontier_slope(xy);
    for (auto& p : f.points) p.deceleration = information_deceleration(f.slope, p.kappa);
    f.selection = kneedle_select(f.points);
    for (std::size_t j = 0; j < f.points.size(); ++j) f.points[j].kneedle_score = f.selection.scores[j];
    return f;
}

inline void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!(grid[j] > 0.0) || !std::isfinite(grid[j])) throw ConfigError("lambda grid values must be positive");
        if (j > 0 && !(grid[j] > grid[j - 1])) throw ConfigError("lambda grid must be strictly increasing");
    }
}

inline const std::vector<double>& default_lambda_grid() {
    static const std::vector<double> grid = {500,  1000, 1500, 2000,  2500,  3000,  3500,
                                             4500, 6250, 7500, 10000, 25000, 100000};
    return grid;
}

struct SweepOptions {
    SamplerConfig sampler;
    bool calibrate = true;
    CalibrationOptions calibration;
    std::size_t workers = 1;
    std::uint64_t base_seed = 0;
};

/// Everything produced for one grid point.
struct LambdaRun {
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::optional<CalibrationResult> calibration;
    Chain chain;
    PosteriorSummary summary;
};

struct SweepResult {
    Frontier frontier;
    std::vector<LambdaRun> runs;

    double lambda_star() const { return frontier.selection.lambda_star; }
};

/// Calibrates (optionally) and runs one chain at `lambda` with the derived seed.
inline LambdaRun run_at_lambda(const ExpectedUtility& objective, const PriorSpec& prior,
                               const ProposalSpec& proposal, double lambda, const SweepOptions& opt,
                               std::uint64_t chain_tag = 0) {
    LambdaRun run;
    run.lambda = lambda;
    run.seed = mix_seed(lambda_seed(opt.base_seed, lambda), chain_tag);
    ProposalSpec used = proposal;
    if (opt.calibrate) {
        run.calibration = calibrate_scales(objective, lambda, prior, proposal, opt.calibration,
                                           mix_seed(lambda_seed(opt.base_seed, lambda), 0xca11b7a7eULL));
        used = run.calibration->proposal;
    }
    run.chain = run_chain(objective, lambda, prior, used, opt.sampler, run.seed);
    run.summary = summarize_chain(run.chain);
    return run;
}

/// One chain per grid value (in parallel), then the frontier and lambda*.
inline SweepResult sweep(const ExpectedUtility& objective, const PriorSpec& prior, const ProposalSpec& proposal,
                         const std::vector<double>& grid, const SweepOptions& opt) {
    validate_grid(grid);
    SweepResult result;
    result.runs = parallel_map(grid.size(), opt.workers, [&](std::size_t j) {
        try {
            return run_at_lambda(objective, prior, proposal, grid[j], opt);
        } catch (const Error& e) {
            throw NumericError("sweep failed at lambda = " + io::format_double(grid[j]) + ": " + e.what());
        }
    });
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& r : result.runs) covs.push_back(r.summary.covariance);
    result.frontier = build_frontier(grid, covs);
    return result;
}

}  // namespace gppp
