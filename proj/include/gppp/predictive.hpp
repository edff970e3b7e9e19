#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/market_data.hpp"
#include "gppp/policy.hpp"
#include "gppp/stats.hpp"

namespace gppp {

/// Out-of-sample return paths: entry (d, t) is the month-t portfolio return
/// under draw d.
inline Eigen::MatrixXd oos_paths(const Eigen::MatrixXd& theta_draws, const Window& oos) {
    if (theta_draws.rows() < 1 || oos.empty()) throw DimensionError("oos paths need at least one draw and one month");
    const auto M = static_cast<Eigen::Index>(oos.size());
    const Eigen::Index K = theta_draws.cols();
    Eigen::RowVectorXd bench(M);
    Eigen::MatrixXd basis(K, M);
    for (Eigen::Index t = 0; t < M; ++t) {
        const auto& s = oos[static_cast<std::size_t>(t)];
        if (s.num_characteristics() != K) throw DimensionError("draw dimension does not match slice characteristics");
        bench(t) = s.benchmark_weights.dot(s.next_returns);
        basis.col(t) = (s.X.transpose() * s.next_returns) / static_cast<double>(s.size());
    }
    Eigen::MatrixXd paths = theta_draws * basis;
    paths.rowwise() += bench;
    return paths;
}

inline Eigen::VectorXd benchmark_path(const Window& oos) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(oos.size()));
    for (std::size_t t = 0; t < oos.size(); ++t) r(static_cast<Eigen::Index>(t)) = oos[t].benchmark_weights.dot(oos[t].next_returns);
    return r;
}

/// Hogg tail-weight coefficient, centred at the normal value 2.63 and scaled
/// by 100. Tails hold ceil(0.05 n) observations; halves hold floor(n / 2)
/// (the middle point of an odd sample is excluded).
inline double hogg_kurtosis(std::span<const double> returns) {
    const std::size_t n = returns.size();
    if (n < 2) throw DomainError("Hogg kurtosis needs at least two observations");
    std::vector<double> s(returns.begin(), returns.end());
    std::sort(s.begin(), s.end());
    const auto tail = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n) - 1e-9));
    const std::size_t half = n / 2;
    auto avg = [&](std::size_t from, std::size_t count) {
        double sum = 0.0;
        for (std::size_t i = from; i < from + count; ++i) sum += s[i];
        return sum / static_cast<double>(count);
    };
    const double top_tail = avg(n - tail, tail);
    const double bottom_tail = avg(0, tail);
    const double top_half = avg(n - half, half);
    const double bottom_half = avg(0, half);
    const double denom = top_half - bottom_half;
    if (!(denom > 0.0)) throw DomainError("Hogg kurtosis: zero denominator (constant series)");
    return 100.0 * ((top_tail - bottom_tail) / denom) - 263.0;
}

enum class Stat { mean_return, sd_return, sharpe, median, iqr, skew, hogg_kurtosis, certainty_equivalent };
inline constexpr std::size_t kNumStats = 8;
inline constexpr std::array<Stat, kNumStats> kAllStats = {Stat::mean_return, Stat::sd_return,  Stat::sharpe,
                                                          Stat::median,      Stat::iqr,        Stat::skew,
                                                          Stat::hogg_kurtosis, Stat::certainty_equivalent};

inline constexpr std::string_view stat_name(Stat s) {
    constexpr std::array<std::string_view, kNumStats> names = {"mean", "sd", "sharpe", "median",
                                                               "iqr",  "skew", "hogg_kurtosis", "ce"};
    return names[static_cast<std::size_t>(s)];
}

/// Return-valued statistics are rescaled to percent in reports.
inline constexpr bool stat_is_return(Stat s) {
    return s == Stat::mean_return || s == Stat::sd_return || s == Stat::median || s == Stat::iqr ||
           s == Stat::certainty_equivalent;
}

/// Statistics of one return path. Missing values mark undefined statistics.
struct PathStats {
    std::array<std::optional<double>, kNumStats> values;

    std::optional<double>& operator[](Stat s) { return values[static_cast<std::size_t>(s)]; }
    const std::optional<double>& operator[](Stat s) const { return values[static_cast<std::size_t>(s)]; }
};

/// `rf` may be empty (zero risk-free rate) or one entry per month.
inline PathStats path_stats(std::span<const double> path, const UtilitySpec& u, std::span<const double> rf = {},
                            double periods_per_year = 12.0) {
    if (path.size() < 2) throw DomainError("path statistics need at least two months");
    if (!rf.empty() && rf.size() != path.size()) throw DimensionError("risk-free series length differs from path");
    PathStats out;
    const double mean = stats::mean(path);
    std::vector<double> sorted(path.begin(), path.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = sorted.front() == sorted.back() ? 0.0 : stats::stddev(path);
    const double rf_mean = rf.empty() ? 0.0 : stats::mean(rf);
    const double median = stats::quantile_sorted(sorted, 0.5);

    out[Stat::mean_return] = mean;
    out[Stat::sd_return] = sd;
    out[Stat::median] = median;
    out[Stat::iqr] = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    if (sd > 0.0) {
        out[Stat::sharpe] = std::sqrt(periods_per_year) * (mean - rf_mean) / sd;
        out[Stat::skew] = (mean - median) / sd;
        try {
            out[Stat::hogg_kurtosis] = hogg_kurtosis(path);
        } catch (const DomainError&) {
        }
    }
    if (u.kind != UtilityKind::quadratic_oracle) {
        try {
            out[Stat::certainty_equivalent] = certainty_equivalent(u, mean_utility(u, path));
        } catch (const DomainError&) {
        }
    }
    return out;
}

inline PathStats path_stats(const Eigen::VectorXd& path, const UtilitySpec& u, const Eigen::VectorXd& rf = {},
                            double periods_per_year = 12.0) {
    return path_stats(std::span<const double>(path.data(), static_cast<std::size_t>(path.size())), u,
                      std::span<const double>(rf.data(), static_cast<std::size_t>(rf.size())), periods_per_year);
}

/// Posterior summary of one statistic across draws.
struct StatSummary {
    std::optional<double> mean;
    std::optional<double> sd;
    std::array<std::optional<double>, 5> quantiles;  // 2.5, 25, 50, 75, 97.5 %
    std::size_t count = 0;     // draws contributing
    std::size_t excluded = 0;  // draws where the statistic was undefined
};

inline StatSummary summarize_values(const std::vector<double>& values, std::size_t excluded) {
    StatSummary s;
    s.count = values.size();
    s.excluded = excluded;
    if (values.empty()) return s;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.mean = stats::mean(values);
    if (values.size() >= 2) s.sd = stats::stddev(values);
    for (int q = 0; q < 5; ++q) s.quantiles[static_cast<std::size_t>(q)] = stats::quantile_sorted(sorted, stats::kReportLevels[q]);
    return s;
}

struct PredictiveSummary {
    std::vector<PathStats> per_draw;
    std::array<StatSummary, kNumStats> posterior;
    std::optional<PathStats> decision;
    std::optional<PathStats> benchmark_value;
    std::optional<PathStats> benchmark_equal;

    const StatSummary& operator[](Stat s) const { return posterior[static_cast<std::size_t>(s)]; }
};

inline PredictiveSummary predictive_summary(const Eigen::MatrixXd& paths, const UtilitySpec& u,
                                            const Eigen::VectorXd& rf = {}) {
    if (paths.rows() < 2) throw DomainError("predictive summary needs at least two draws");
    PredictiveSummary out;
    out.per_draw.reserve(static_cast<std::size_t>(paths.rows()));
    for (Eigen::Index d = 0; d < paths.rows(); ++d) out.per_draw.push_back(path_stats(Eigen::VectorXd(paths.row(d).transpose()), u, rf));
    for (Stat st : kAllStats) {
        std::vector<double> vals;
        std::size_t excluded = 0;
        for (const auto& ps : out.per_draw) {
            if (ps[st]) vals.push_back(*ps[st]);
            else ++excluded;
        }
        out.posterior[static_cast<std::size_t>(st)] = summarize_values(vals, excluded);
    }
    return out;
}

/// Statistics of the single path generated by the posterior-mean theta.
inline PathStats decision_path(const Theta& posterior_mean, const Window& oos, const UtilitySpec& u,
                               const Eigen::VectorXd& rf = {}) {
    const Eigen::MatrixXd one = posterior_mean.transpose();
    return path_stats(Eigen::VectorXd(oos_paths(one, oos).row(0).transpose()), u, rf);
}

/// Gaussian kernel density with Silverman's rule-of-thumb bandwidth.
class GaussianKde {
public:
    explicit GaussianKde(std::vector<double> samples) : xs_(std::move(samples)) {
        if (xs_.size() < 2) throw DomainError("kernel density needs at least two samples");
        std::sort(xs_.begin(), xs_.end());
        const double sd = stats::stddev(xs_);
        const double iqr = stats::quantile_sorted(xs_, 0.75) - stats::quantile_sorted(xs_, 0.25);
        double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
        if (!(spread > 0.0)) throw DomainError("kernel density of a constant sample");
        h_ = 0.9 * spread * std::pow(static_cast<double>(xs_.size()), -0.2);
    }

    double bandwidth() const { return h_; }
    double min() const { return xs_.front(); }
    double max() const { return xs_.back(); }

    double operator()(double x) const {
        const double reach = 8.0 * h_;
        const auto lo = std::lower_bound(xs_.begin(), xs_.end(), x - reach);
        const auto hi = std::upper_bound(lo, xs_.end(), x + reach);
        double sum = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const double z = (x - *it) / h_;
            sum += std::exp(-0.5 * z * z);
        }
        return sum / (static_cast<double>(xs_.size()) * h_ * std::sqrt(2.0 * std::numbers::pi));
    }

private:
    std::vector<double> xs_;
    double h_ = 0.0;
};

struct DensityGrid {
    std::vector<double> grid;
    std::vector<double> policy;
    std::vector<double> benchmark;
    std::vector<std::optional<double>> log_ratio;  // log(policy / benchmark)
};

/// Pooled posterior-predictive return density against the benchmark path density.
inline DensityGrid density_grid(const Eigen::MatrixXd& paths, const Eigen::VectorXd& benchmark,
                                std::size_t points = 256) {
    if (points < 2) throw ConfigError("density grid needs at least two points");
    GaussianKde ppp(std::vector<double>(paths.data(), paths.data() + paths.size()));
    GaussianKde bench(std::vector<double>(benchmark.data(), benchmark.data() + benchmark.size()));
    const double lo = std::min(ppp.min() - 3.0 * ppp.bandwidth(), bench.min() - 3.0 * bench.bandwidth());
    const double hi = std::max(ppp.max() + 3.0 * ppp.bandwidth(), bench.max() + 3.0 * bench.bandwidth());
    DensityGrid g;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        const double p = ppp(x), b = bench(x);
        g.grid.push_back(x);
        g.policy.push_back(p);
        g.benchmark.push_back(b);
        g.log_ratio.push_back(p > 0.0 && b > 0.0 ? std::optional<double>(std::log(p / b)) : std::nullopt);
    }
    return g;
}

}  // namespace gppp
