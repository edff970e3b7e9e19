#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/market_data.hpp"
#include "gppp/random.hpp"

namespace gppp {

/// Panel generator with a planted linear characteristic premium:
/// r_{i,t+1} = mu0 + x_i'b + f_t + eps_{i,t}.
struct SynthConfig {
    std::size_t N = 200;
    std::size_t T = 240;
    std::size_t K = 6;
    Eigen::VectorXd signal;  // b; zero if empty
    double noise_sd = 0.08;
    double market_vol = 0.045;
    double mu0 = 0.01;
    double log_cap_sd = 1.0;
    std::uint64_t seed = 1;
    std::string first_month = "1960-01";

    void validate() const {
        if (K < 1) throw ConfigError("synthetic panel needs K >= 1");
        if (N < K + 2) throw ConfigError("synthetic panel needs N >= K + 2");
        if (T < 2) throw ConfigError("synthetic panel needs T >= 2");
        if (!(noise_sd > 0.0)) throw ConfigError("noise_sd must be positive");
        if (!(market_vol >= 0.0)) throw ConfigError("market_vol must be non-negative");
        if (signal.size() != 0 && signal.size() != static_cast<Eigen::Index>(K))
            throw DimensionError("signal must have K entries");
    }
};

/// "YYYY-MM" label `offset` months after `first` (also "YYYY-MM").
inline std::string month_label(const std::string& first, std::size_t offset) {
    int y = 0, m = 0;
    if (std::sscanf(first.c_str(), "%d-%d", &y, &m) != 2 || m < 1 || m > 12)
        throw ConfigError("first_month must look like YYYY-MM");
    const long total = static_cast<long>(y) * 12 + (m - 1) + static_cast<long>(offset);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04ld-%02ld", total / 12, total % 12 + 1);
    return buf;
}

inline constexpr double kReturnFloor = -0.99;

inline CharacteristicPanel generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto N = static_cast<Eigen::Index>(cfg.N);
    const auto K = static_cast<Eigen::Index>(cfg.K);
    const Eigen::VectorXd b = cfg.signal.size() ? cfg.signal : Eigen::VectorXd::Zero(K);

    CharacteristicPanel panel;
    for (Eigen::Index k = 0; k < K; ++k) panel.characteristic_names.push_back("c" + std::to_string(k + 1));
    for (std::size_t t = 0; t < cfg.T; ++t) {
        MonthData md;
        md.month = month_label(cfg.first_month, t);
        md.characteristics.resize(N, K);
        md.market_caps.resize(N);
        md.next_returns.resize(N);
        for (Eigen::Index i = 0; i < N; ++i) {
            md.asset_ids.push_back("A" + std::to_string(i + 1));
            for (Eigen::Index k = 0; k < K; ++k) md.characteristics(i, k) = normal(rng);
            md.market_caps(i) = std::exp(cfg.log_cap_sd * normal(rng));
        }
        const double f = cfg.market_vol * normal(rng);
        for (Eigen::Index i = 0; i < N; ++i) {
            const double systematic = cfg.mu0 + md.characteristics.row(i).dot(b) + f;
            double r = systematic + cfg.noise_sd * normal(rng);
            // Redraw the idiosyncratic shock a bounded number of times, then clamp.
            for (int retry = 0; retry < 8 && !(r > kReturnFloor); ++retry) r = systematic + cfg.noise_sd * normal(rng);
            md.next_returns(i) = std::max(r, kReturnFloor);
        }
        panel.months.push_back(std::move(md));
    }
    validate_panel(panel);
    return panel;
}

}  // namespace gppp
