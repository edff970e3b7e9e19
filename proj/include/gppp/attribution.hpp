#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/io.hpp"
#include "gppp/predictive.hpp"

namespace gppp {

struct FactorPanel {
    std::vector<std::string> months;
    std::vector<std::string> names;
    Eigen::MatrixXd returns;  // M x F, decimals
    Eigen::VectorXd risk_free;

    /// Rows for the requested months, in that order.
    FactorPanel select(const std::vector<std::string>& wanted) const {
        std::unordered_map<std::string, Eigen::Index> pos;
        for (std::size_t i = 0; i < months.size(); ++i) pos.emplace(months[i], static_cast<Eigen::Index>(i));
        FactorPanel out;
        out.names = names;
        out.returns.resize(static_cast<Eigen::Index>(wanted.size()), returns.cols());
        out.risk_free.resize(static_cast<Eigen::Index>(wanted.size()));
        for (std::size_t i = 0; i < wanted.size(); ++i) {
            const auto it = pos.find(wanted[i]);
            if (it == pos.end()) throw DataError("factor file has no row for month " + wanted[i]);
            out.months.push_back(wanted[i]);
            out.returns.row(static_cast<Eigen::Index>(i)) = returns.row(it->second);
            out.risk_free(static_cast<Eigen::Index>(i)) = risk_free(it->second);
        }
        return out;
    }
};

/// Factor CSV: month, rf, then one column per factor.
inline FactorPanel parse_factor_csv(const std::string& text, const std::string& origin = "<memory>") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(origin + ": empty factor file");
    auto header = io::split_csv_line(line);
    for (auto& h : header) h = io::trim(h);
    if (header.size() < 3 || header[0] != "month" || header[1] != "rf")
        throw SchemaError(origin + ": factor header must start with month,rf and name at least one factor");
    FactorPanel fp;
    fp.names.assign(header.begin() + 2, header.end());
    std::vector<std::vector<double>> rows;
    std::vector<double> rf;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        const auto f = io::split_csv_line(line);
        const std::string where = origin + ": row " + std::to_string(lineno);
        if (f.size() != header.size()) throw ParseError(where + ": wrong field count");
        fp.months.push_back(io::trim(f[0]));
        double v;
        if (!io::parse_double(f[1], v)) throw ParseError(where + ": bad rf value");
        rf.push_back(v);
        std::vector<double> r;
        for (std::size_t c = 2; c < f.size(); ++c) {
            if (!io::parse_double(f[c], v)) throw ParseError(where + ": bad value in column '" + header[c] + "'");
            r.push_back(v);
        }
        rows.push_back(std::move(r));
    }
    fp.returns.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fp.names.size()));
    fp.risk_free.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        fp.risk_free(static_cast<Eigen::Index>(i)) = rf[i];
        for (std::size_t c = 0; c < rows[i].size(); ++c)
            fp.returns(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    return fp;
}

inline FactorPanel load_factor_csv(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("factor file not found: " + path.string());
    return parse_factor_csv(io::read_file(path), path.string());
}

struct OlsFit {
    Eigen::VectorXd coefficients;  // intercept first, then one beta per factor
    Eigen::VectorXd residuals;
    Eigen::MatrixXd design;        // M x (F + 1) with a leading column of ones
    Eigen::VectorXd response;

    double alpha() const { return coefficients(0); }
    Eigen::VectorXd betas() const { return coefficients.tail(coefficients.size() - 1); }
};

inline OlsFit ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors) {
    const Eigen::Index M = y.size(), F = factors.cols();
    if (factors.rows() != M) throw DimensionError("factor rows must match the return series");
    if (M < F + 2) throw NumericError("regression needs at least F + 2 observations");
    OlsFit fit;
    fit.design.resize(M, F + 1);
    fit.design.col(0).setOnes();
    fit.design.rightCols(F) = factors;
    fit.response = y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fit.design);
    if (qr.rank() < F + 1) throw NumericError("factor design matrix is rank deficient");
    fit.coefficients = qr.solve(y);
    fit.residuals = y - fit.design * fit.coefficients;
    return fit;
}

inline std::size_t default_hac_lag(std::size_t M) {
    return static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(M) / 100.0, 2.0 / 9.0)));
}

/// Newey-West covariance of the coefficients with Bartlett weights.
inline Eigen::MatrixXd hac_covariance(const OlsFit& fit, std::size_t lag) {
    const Eigen::MatrixXd& X = fit.design;
    const Eigen::VectorXd& e = fit.residuals;
    const Eigen::Index M = X.rows(), P = X.cols();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(P, P);
    for (Eigen::Index t = 0; t < M; ++t) S += e(t) * e(t) * X.row(t).transpose() * X.row(t);
    for (std::size_t l = 1; l <= lag && static_cast<Eigen::Index>(l) < M; ++l) {
        const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lag + 1);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(P, P);
        for (Eigen::Index t = static_cast<Eigen::Index>(l); t < M; ++t)
            G += e(t) * e(t - static_cast<Eigen::Index>(l)) * X.row(t).transpose() * X.row(t - static_cast<Eigen::Index>(l));
        S += w * (G + G.transpose());
    }
    const Eigen::MatrixXd bread = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(P, P));
    return bread * S * bread;
}

/// Coefficient / HAC standard error; missing when the fit is exact.
inline std::vector<std::optional<double>> hac_tstats(const OlsFit& fit, std::size_t lag) {
    const Eigen::MatrixXd V = hac_covariance(fit, lag);
    const double scale = std::max(1.0, fit.response.squaredNorm());
    const bool perfect = fit.residuals.squaredNorm() <= 1e-24 * scale;
    std::vector<std::optional<double>> t;
    for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i) {
        const double var = V(i, i);
        if (perfect || !(var > 0.0)) t.emplace_back(std::nullopt);
        else t.emplace_back(fit.coefficients(i) / std::sqrt(var));
    }
    return t;
}

namespace detail {
inline double sample_var(const Eigen::VectorXd& v) {
    return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}
}  // namespace detail

/// Share of portfolio variance attributed to each source, covariances
/// ignored: element 0 is the residual, then one per factor. Shares need not
/// sum to one.
inline Eigen::VectorXd variance_shares(const OlsFit& fit) {
    const double total = detail::sample_var(fit.response);
    const double spread = fit.response.maxCoeff() - fit.response.minCoeff();
    if (!(total > 0.0) || !(spread > 1e-12 * std::max(1.0, fit.response.cwiseAbs().maxCoeff()))) throw NumericError("portfolio variance is zero");
    const Eigen::Index F = fit.coefficients.size() - 1;
    Eigen::VectorXd shares(F + 1);
    shares(0) = detail::sample_var(fit.residuals) / total;
    for (Eigen::Index f = 0; f < F; ++f) {
        const double b = fit.coefficients(f + 1);
        shares(f + 1) = b * b * detail::sample_var(Eigen::VectorXd(fit.design.col(f + 1))) / total;
    }
    return shares;
}

struct AttributionSummary {
    std::vector<std::string> coefficient_names;  // alpha, factors...
    std::vector<StatSummary> coefficients;
    std::vector<std::string> share_names;        // residual, factors...
    std::vector<StatSummary> shares;
    std::size_t failed_draws = 0;
    std::optional<OlsFit> decision_fit;
    std::vector<std::optional<double>> decision_tstats;
    std::optional<Eigen::VectorXd> decision_shares;
};

/// Regresses every draw's excess return path on the factors and summarizes
/// the coefficient and variance-share posteriors. The decision path, when
/// given, is regressed separately with HAC t-statistics.
inline AttributionSummary posterior_attribution(const Eigen::MatrixXd& paths, const FactorPanel& factors,
                                                std::optional<std::size_t> lag = std::nullopt,
                                                const std::optional<Eigen::VectorXd>& decision = std::nullopt) {
    if (paths.rows() < 2) throw DomainError("posterior attribution needs at least two draws");
    if (paths.cols() != factors.returns.rows()) throw DimensionError("paths and factor months disagree");
    const Eigen::Index F = factors.returns.cols();
    AttributionSummary out;
    out.coefficient_names.push_back("alpha");
    out.share_names.push_back("residual");
    for (const auto& n : factors.names) {
        out.coefficient_names.push_back(n);
        out.share_names.push_back(n);
    }
    std::vector<std::vector<double>> coefs(static_cast<std::size_t>(F + 1)), shares(static_cast<std::size_t>(F + 1));
    for (Eigen::Index d = 0; d < paths.rows(); ++d) {
        const Eigen::VectorXd y = paths.row(d).transpose() - factors.risk_free;
        try {
            const OlsFit fit = ols_fit(y, factors.returns);
            const Eigen::VectorXd sh = variance_shares(fit);
            for (Eigen::Index i = 0; i <= F; ++i) {
                coefs[static_cast<std::size_t>(i)].push_back(fit.coefficients(i));
                shares[static_cast<std::size_t>(i)].push_back(sh(i));
            }
        } catch (const NumericError&) {
            ++out.failed_draws;
        }
    }
    for (Eigen::Index i = 0; i <= F; ++i) {
        out.coefficients.push_back(summarize_values(coefs[static_cast<std::size_t>(i)], out.failed_draws));
        out.shares.push_back(summarize_values(shares[static_cast<std::size_t>(i)], out.failed_draws));
    }
    if (decision) {
        const Eigen::VectorXd y = *decision - factors.risk_free;
        out.decision_fit = ols_fit(y, factors.returns);
        out.decision_tstats = hac_tstats(*out.decision_fit, lag.value_or(default_hac_lag(static_cast<std::size_t>(y.size()))));
        out.decision_shares = variance_shares(*out.decision_fit);
    }
    return out;
}

}  // namespace gppp
