#pragma once

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gppp/attribution.hpp"
#include "gppp/diagnostics.hpp"
#include "gppp/frontier.hpp"
#include "gppp/io.hpp"
#include "gppp/predictive.hpp"
#include "gppp/sampler.hpp"

namespace gppp::persist {

using nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return rows;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ConfigError("ragged matrix in JSON");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return m;
}

inline json utility_to_json(const UtilitySpec& u) {
    json j{{"kind", u.name()}};
    if (u.kind != UtilityKind::log) j["gamma"] = u.gamma;
    if (u.kind == UtilityKind::quadratic_oracle) {
        j["g"] = to_json(u.g);
        j["Q"] = to_json(u.Q);
    }
    return j;
}

inline UtilitySpec utility_from_json(const json& j) {
    const std::string kind = j.value("kind", "log");
    if (kind == "log") return UtilitySpec::log_utility();
    if (kind == "power") return UtilitySpec::power(j.at("gamma").get<double>());
    if (kind == "quadratic-oracle")
        return UtilitySpec::quadratic(vector_from_json(j.at("g")), matrix_from_json(j.at("Q")), j.at("gamma").get<double>());
    throw ConfigError("unknown utility kind '" + kind + "' (expected log|power|quadratic-oracle)");
}

inline std::string optional_cell(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

// ---------------------------------------------------------------------------
// Chains: draws CSV plus a JSON sidecar.

inline std::string chain_csv(const Chain& c) {
    std::string out;
    for (Eigen::Index k = 0; k < c.dim(); ++k) out += "theta_" + std::to_string(k + 1) + ",";
    out += "utility\n";
    for (Eigen::Index d = 0; d < c.size(); ++d) {
        for (Eigen::Index k = 0; k < c.dim(); ++k) out += io::format_double(c.draws(d, k)) + ",";
        out += io::format_double(c.utilities.size() ? c.utilities(d) : 0.0) + "\n";
    }
    return out;
}

inline json chain_sidecar(const Chain& c, const UtilitySpec& u) {
    Eigen::VectorXd rates = acceptance_rates(c);
    return json{{"lambda", c.lambda},
                {"seed", c.seed},
                {"burn_in", c.burn_in},
                {"keep", c.size()},
                {"accept_counts", c.accept_counts},
                {"proposal_counts", c.proposal_counts},
                {"acceptance_rates", to_json(rates)},
                {"proposal", {{"alpha", c.proposal.alpha}, {"scales", to_json(c.proposal.scales)}}},
                {"utility", utility_to_json(u)},
                {"window_id", c.window_id}};
}

inline void write_chain(const std::filesystem::path& csv_path, const Chain& c, const UtilitySpec& u) {
    io::write_atomic(csv_path, chain_csv(c));
    auto side = csv_path;
    side.replace_extension(".json");
    io::write_atomic(side, chain_sidecar(c, u).dump(2) + "\n");
}

inline Chain read_chain(const std::filesystem::path& csv_path) {
    auto side = csv_path;
    side.replace_extension(".json");
    const json meta = json::parse(io::read_file(side));
    std::istringstream in(io::read_file(csv_path));
    std::string line;
    std::getline(in, line);
    const auto header = io::split_csv_line(line);
    if (header.size() < 2 || header.back() != "utility") throw SchemaError(csv_path.string() + ": not a chain file");
    const auto K = static_cast<Eigen::Index>(header.size() - 1);
    std::vector<double> vals;
    std::size_t rows = 0, lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != header.size()) throw ParseError(csv_path.string() + ": row " + std::to_string(lineno) + ": wrong field count");
        for (const auto& cell : f) {
            double v;
            if (!io::parse_double(cell, v)) throw ParseError(csv_path.string() + ": row " + std::to_string(lineno) + ": bad number");
            vals.push_back(v);
        }
        ++rows;
    }
    Chain c;
    c.draws.resize(static_cast<Eigen::Index>(rows), K);
    c.utilities.resize(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        for (Eigen::Index k = 0; k < K; ++k) c.draws(static_cast<Eigen::Index>(r), k) = vals[r * header.size() + static_cast<std::size_t>(k)];
        c.utilities(static_cast<Eigen::Index>(r)) = vals[r * header.size() + static_cast<std::size_t>(K)];
    }
    c.lambda = meta.at("lambda").get<double>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    c.burn_in = meta.at("burn_in").get<std::size_t>();
    c.accept_counts = meta.at("accept_counts").get<std::vector<std::uint64_t>>();
    c.proposal_counts = meta.at("proposal_counts").get<std::vector<std::uint64_t>>();
    c.proposal.alpha = meta.at("proposal").at("alpha").get<double>();
    c.proposal.scales = vector_from_json(meta.at("proposal").at("scales"));
    c.utility = meta.at("utility").value("kind", "log");
    c.window_id = meta.value("window_id", "");
    return c;
}

// ---------------------------------------------------------------------------
// Frontier.

inline std::string frontier_csv(const Frontier& f) {
    std::string out = "lambda,kappa,log_kappa,neg_log_det,deceleration,kneedle_score,selected\n";
    for (std::size_t j = 0; j < f.points.size(); ++j) {
        const auto& p = f.points[j];
        out += io::format_double(p.lambda) + "," + io::format_double(p.kappa) + "," + io::format_double(p.log_kappa) +
               "," + io::format_double(p.neg_log_det) + "," + io::format_double(p.deceleration) + "," +
               io::format_double(p.kneedle_score) + "," + (j == f.selection.index ? "1" : "0") + "\n";
    }
    return out;
}

inline json sweep_to_json(const SweepResult& s) {
    json runs = json::array();
    for (const auto& r : s.runs) {
        json jr{{"lambda", r.lambda},
                {"seed", r.seed},
                {"proposal", {{"alpha", r.chain.proposal.alpha}, {"scales", to_json(r.chain.proposal.scales)}}},
                {"acceptance_rates", to_json(acceptance_rates(r.chain))},
                {"posterior_mean", to_json(r.summary.mean)},
                {"posterior_covariance", to_json(r.summary.covariance)},
                {"posterior_quantiles", to_json(r.summary.quantiles)}};
        if (r.calibration) {
            jr["calibration"] = {{"converged", r.calibration->converged},
                                 {"rounds", r.calibration->rounds},
                                 {"last_rates", to_json(r.calibration->last_rates())}};
        }
        runs.push_back(std::move(jr));
    }
    return json{{"lambda_star", s.lambda_star()},
                {"selected_index", s.frontier.selection.index},
                {"slope", s.frontier.slope},
                {"runs", std::move(runs)}};
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string_view stat_unit(Stat s) {
    switch (s) {
    case Stat::sharpe: return "annualized_ratio";
    case Stat::skew: return "ratio";
    case Stat::hogg_kurtosis: return "hogg_index";
    default: return "decimal_monthly";
    }
}

/// Posterior predictive table: one row per statistic.
inline std::string summary_csv(const PredictiveSummary& s) {
    std::string out =
        "statistic,unit,mean,sd,q2.5,q25,median,q75,q97.5,decision_path,benchmark_value,benchmark_equal,n_draws,n_excluded\n";
    out += "units,label,per_row,per_row,per_row,per_row,per_row,per_row,per_row,per_row,per_row,per_row,count,count\n";
    for (Stat st : kAllStats) {
        const auto& p = s[st];
        out += std::string(stat_name(st)) + "," + std::string(stat_unit(st)) + "," + optional_cell(p.mean) + "," +
               optional_cell(p.sd);
        for (const auto& q : p.quantiles) out += "," + optional_cell(q);
        out += "," + (s.decision ? optional_cell((*s.decision)[st]) : std::string());
        out += "," + (s.benchmark_value ? optional_cell((*s.benchmark_value)[st]) : std::string());
        out += "," + (s.benchmark_equal ? optional_cell((*s.benchmark_equal)[st]) : std::string());
        out += "," + std::to_string(p.count) + "," + std::to_string(p.excluded) + "\n";
    }
    return out;
}

inline std::string density_csv(const DensityGrid& g) {
    std::string out = "return,ppp_density,benchmark_density,log_density_ratio\n";
    out += "decimal_monthly,per_unit_return,per_unit_return,log_ratio\n";
    for (std::size_t i = 0; i < g.grid.size(); ++i)
        out += io::format_double(g.grid[i]) + "," + io::format_double(g.policy[i]) + "," +
               io::format_double(g.benchmark[i]) + "," + optional_cell(g.log_ratio[i]) + "\n";
    return out;
}

inline std::string attribution_csv(const AttributionSummary& a) {
    std::string out = "term,kind,unit,mean,sd,q2.5,q25,median,q75,q97.5,decision_path,decision_t_stat,n_draws,n_excluded\n";
    out += "units,label,label,per_row,per_row,per_row,per_row,per_row,per_row,per_row,per_row,t_stat,count,count\n";
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
        const auto& p = a.coefficients[i];
        out += a.coefficient_names[i] + ",coefficient," + (i == 0 ? "decimal_monthly" : "loading") + "," +
               optional_cell(p.mean) + "," + optional_cell(p.sd);
        for (const auto& q : p.quantiles) out += "," + optional_cell(q);
        out += "," + (a.decision_fit ? io::format_double(a.decision_fit->coefficients(static_cast<Eigen::Index>(i))) : std::string());
        out += "," + (i < a.decision_tstats.size() ? optional_cell(a.decision_tstats[i]) : std::string());
        out += "," + std::to_string(p.count) + "," + std::to_string(p.excluded) + "\n";
    }
    for (std::size_t i = 0; i < a.shares.size(); ++i) {
        const auto& p = a.shares[i];
        out += a.share_names[i] + ",variance_share,fraction," + optional_cell(p.mean) + "," + optional_cell(p.sd);
        for (const auto& q : p.quantiles) out += "," + optional_cell(q);
        out += "," + (a.decision_shares ? io::format_double((*a.decision_shares)(static_cast<Eigen::Index>(i))) : std::string());
        out += ",," + std::to_string(p.count) + "," + std::to_string(p.excluded) + "\n";
    }
    return out;
}

/// Diagnostics keyed by chain id, plus the pooled quantities.
inline json diagnostics_json(const DiagnosticsReport& rep, const std::vector<Chain>& chains) {
    json j = json::object();
    for (std::size_t i = 0; i < chains.size(); ++i) {
        json jc{{"lambda", chains[i].lambda},
                {"seed", chains[i].seed},
                {"draws", chains[i].size()},
                {"acceptance_rates", to_json(rep.acceptance[i])},
                {"ess", to_json(rep.ess[i])},
                {"ess_utility", rep.ess_utility[i] ? json(*rep.ess_utility[i]) : json(nullptr)}};
        j["chains"]["chain_" + std::to_string(i)] = std::move(jc);
    }
    j["mpsrf"] = rep.mpsrf ? json(*rep.mpsrf) : json(nullptr);
    j["correlations"] = to_json(rep.correlations);
    return j;
}

}  // namespace gppp::persist
