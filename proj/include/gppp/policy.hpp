#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/market_data.hpp"

namespace gppp {

/// Characteristic tilts, one coefficient per characteristic.
using Theta = Eigen::VectorXd;

enum class UtilityKind { log, power, quadratic_oracle };

/// Investor preferences. The quadratic oracle replaces the sample objective by
/// g'theta - (gamma/2) theta'Q theta, which makes the posterior exactly Gaussian.
struct UtilitySpec {
    UtilityKind kind = UtilityKind::log;
    double gamma = 1.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd Q;

    static UtilitySpec log_utility() { return {}; }

    static UtilitySpec power(double gamma) {
        UtilitySpec u;
        u.kind = UtilityKind::power;
        u.gamma = gamma;
        u.validate();
        return u;
    }

    static UtilitySpec quadratic(Eigen::VectorXd g, Eigen::MatrixXd Q, double gamma) {
        UtilitySpec u;
        u.kind = UtilityKind::quadratic_oracle;
        u.gamma = gamma;
        u.g = std::move(g);
        u.Q = std::move(Q);
        u.validate();
        return u;
    }

    void validate() const {
        switch (kind) {
        case UtilityKind::log: break;
        case UtilityKind::power:
            if (!(gamma > 0.0) || gamma == 1.0 || !std::isfinite(gamma))
                throw ConfigError("power utility requires gamma > 0 and gamma != 1");
            break;
        case UtilityKind::quadratic_oracle: {
            if (!(gamma > 0.0)) throw ConfigError("quadratic-oracle utility requires gamma > 0");
            if (Q.rows() != Q.cols() || Q.rows() != g.size())
                throw DimensionError("quadratic-oracle: g and Q dimensions disagree");
            if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12)
                throw ConfigError("quadratic-oracle: Q must be symmetric");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-10) throw ConfigError("quadratic-oracle: Q must be PSD");
            break;
        }
        }
    }

    std::string name() const {
        switch (kind) {
        case UtilityKind::log: return "log";
        case UtilityKind::power: return "power";
        case UtilityKind::quadratic_oracle: return "quadratic-oracle";
        }
        return "?";
    }
};

inline constexpr double kBankrupt = -std::numeric_limits<double>::infinity();

inline void check_dims(const StandardizedSlice& slice, const Theta& theta) {
    if (slice.num_characteristics() != theta.size())
        throw DimensionError("slice has " + std::to_string(slice.num_characteristics()) +
                             " characteristics, theta has " + std::to_string(theta.size()));
}

/// Benchmark weight plus the (1/N) theta'x tilt.
inline Eigen::VectorXd portfolio_weights(const StandardizedSlice& slice, const Theta& theta) {
    check_dims(slice, theta);
    return slice.benchmark_weights + (slice.X * theta) / static_cast<double>(slice.size());
}

inline double portfolio_return(const StandardizedSlice& slice, const Theta& theta) {
    return portfolio_weights(slice, theta).dot(slice.next_returns);
}

/// U(1+r); gross returns at or below zero map to -infinity.
inline double utility_value(const UtilitySpec& u, double r) {
    const double gross = 1.0 + r;
    switch (u.kind) {
    case UtilityKind::log: return gross > 0.0 ? std::log(gross) : kBankrupt;
    case UtilityKind::power:
        return gross > 0.0 ? std::pow(gross, 1.0 - u.gamma) / (1.0 - u.gamma) : kBankrupt;
    case UtilityKind::quadratic_oracle: break;
    }
    throw DomainError("quadratic-oracle utility has no per-return form");
}

inline double quadratic_objective(const UtilitySpec& u, const Theta& theta) {
    if (theta.size() != u.g.size()) throw DimensionError("theta and quadratic-oracle g dimensions disagree");
    return u.g.dot(theta) - 0.5 * u.gamma * theta.dot(u.Q * theta);
}

/// Mean utility of portfolio returns over the window, equal 1/T weights.
inline double sample_expected_utility(const Window& window, const Theta& theta, const UtilitySpec& u) {
    if (u.kind == UtilityKind::quadratic_oracle) return quadratic_objective(u, theta);
    if (window.empty()) throw DomainError("sample expected utility over an empty window");
    double sum = 0.0;
    for (const auto& slice : window) {
        const double v = utility_value(u, portfolio_return(slice, theta));
        if (v == kBankrupt) return kBankrupt;
        sum += v;
    }
    return sum / static_cast<double>(window.size());
}

/// Mean of U over a return path; -infinity if any month is bankrupt.
inline double mean_utility(const UtilitySpec& u, std::span<const double> returns) {
    if (returns.empty()) throw DomainError("mean utility of an empty path");
    double sum = 0.0;
    for (double r : returns) {
        const double v = utility_value(u, r);
        if (v == kBankrupt) return kBankrupt;
        sum += v;
    }
    return sum / static_cast<double>(returns.size());
}

/// Sure return whose utility equals `expected_utility`.
inline double certainty_equivalent(const UtilitySpec& u, double expected_utility) {
    if (expected_utility == kBankrupt) return -1.0;
    switch (u.kind) {
    case UtilityKind::log: return std::exp(expected_utility) - 1.0;
    case UtilityKind::power: {
        const double base = (1.0 - u.gamma) * expected_utility;
        if (!(base > 0.0)) throw DomainError("expected utility outside the range of power utility");
        return std::pow(base, 1.0 / (1.0 - u.gamma)) - 1.0;
    }
    case UtilityKind::quadratic_oracle: return expected_utility;
    }
    return expected_utility;
}

/// In-sample objective with the per-month return basis precomputed: the
/// portfolio return in month t is b_t + c_t'theta, where b_t is the benchmark
/// return and c_t = X_t'r_t / N_t. Evaluation is O(T K) instead of O(T N K).
class ExpectedUtility {
public:
    ExpectedUtility(const Window& window, UtilitySpec u) : u_(std::move(u)) {
        u_.validate();
        if (u_.kind == UtilityKind::quadratic_oracle) {
            dim_ = u_.g.size();
            return;
        }
        if (window.empty()) throw DomainError("expected utility over an empty window");
        dim_ = window.front().num_characteristics();
        const auto T = static_cast<Eigen::Index>(window.size());
        bench_.resize(T);
        basis_.resize(T, dim_);
        for (Eigen::Index t = 0; t < T; ++t) {
            const auto& s = window[static_cast<std::size_t>(t)];
            if (s.num_characteristics() != dim_) throw DimensionError("window slices disagree on K");
            bench_(t) = s.benchmark_weights.dot(s.next_returns);
            basis_.row(t) = (s.X.transpose() * s.next_returns) / static_cast<double>(s.size());
        }
    }

    Eigen::Index dim() const { return dim_; }
    const UtilitySpec& utility() const { return u_; }

    /// Portfolio return path over the window (empty for the quadratic oracle).
    Eigen::VectorXd returns(const Theta& theta) const {
        if (theta.size() != dim_) throw DimensionError("theta dimension mismatch");
        return bench_ + basis_ * theta;
    }

    double operator()(const Theta& theta) const {
        if (u_.kind == UtilityKind::quadratic_oracle) return quadratic_objective(u_, theta);
        const Eigen::VectorXd r = returns(theta);
        return mean_utility(u_, std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
    }

private:
    UtilitySpec u_;
    Eigen::Index dim_ = 0;
    Eigen::VectorXd bench_;
    Eigen::MatrixXd basis_;
};

}  // namespace gppp
