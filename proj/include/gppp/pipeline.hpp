#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gppp/attribution.hpp"
#include "gppp/diagnostics.hpp"
#include "gppp/error.hpp"
#include "gppp/frontier.hpp"
#include "gppp/io.hpp"
#include "gppp/market_data.hpp"
#include "gppp/parallel.hpp"
#include "gppp/persist.hpp"
#include "gppp/predictive.hpp"
#include "gppp/random.hpp"
#include "gppp/sampler.hpp"
#include "gppp/synthetic.hpp"

namespace gppp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

struct FactorSpec {
    fs::path path;
    std::optional<std::size_t> lag;
};

/// Everything a batch run needs. Paths are resolved against the config
/// file's directory when relative.
struct RunConfig {
    fs::path panel_path;
    PanelSchema schema;
    std::optional<SynthConfig> synth;
    UtilitySpec utility;
    std::optional<PriorSpec> prior;  // N(0, I) when absent
    double alpha = 1.75;
    double scale = 1.0;
    std::optional<Eigen::VectorXd> scales;
    bool auto_calibrate = true;
    CalibrationOptions calibration;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t window_length = 240;
    std::vector<std::string> end_months;  // latest feasible end month when empty
    std::size_t oos_horizon = 12;
    SamplerConfig sampler;
    std::size_t chains = 3;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    WeightScheme benchmark = WeightScheme::value;
    std::optional<FactorSpec> factors;
    fs::path output = "out";
    std::size_t density_points = 256;
};

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

inline std::string scheme_name(WeightScheme s) { return s == WeightScheme::value ? "value" : "equal"; }

}  // namespace detail

/// Builds a RunConfig from parsed JSON; unknown keys are rejected.
inline RunConfig parse_config(const json& j, const fs::path& base_dir = {}) {
    using detail::get;
    detail::check_keys(j, "config",
                       {"panel", "synth", "utility", "prior", "proposal", "lambda_grid", "window", "oos_horizon",
                        "sampler", "seed", "workers", "benchmark", "factors", "output", "density_points"});
    RunConfig c;
    try {
        if (j.contains("panel")) {
            const auto& p = j.at("panel");
            detail::check_keys(p, "panel", {"path", "schema"});
            if (p.contains("path")) c.panel_path = detail::resolve(base_dir, get<std::string>(p, "path", "panel", ""));
            if (p.contains("schema")) {
                const auto& s = p.at("schema");
                detail::check_keys(s, "panel.schema", {"month", "asset_id", "characteristics", "market_cap", "next_return"});
                c.schema.month = get<std::string>(s, "month", "panel.schema", c.schema.month);
                c.schema.asset_id = get<std::string>(s, "asset_id", "panel.schema", c.schema.asset_id);
                c.schema.market_cap = get<std::string>(s, "market_cap", "panel.schema", c.schema.market_cap);
                c.schema.next_return = get<std::string>(s, "next_return", "panel.schema", c.schema.next_return);
                c.schema.characteristics = get<std::vector<std::string>>(s, "characteristics", "panel.schema", {});
            }
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            detail::check_keys(s, "synth", {"N", "T", "K", "signal", "noise_sd", "market_vol", "mu0", "log_cap_sd", "seed", "first_month"});
            SynthConfig sc;
            sc.N = get<std::size_t>(s, "N", "synth", sc.N);
            sc.T = get<std::size_t>(s, "T", "synth", sc.T);
            sc.K = get<std::size_t>(s, "K", "synth", sc.K);
            if (s.contains("signal")) sc.signal = persist::vector_from_json(s.at("signal"));
            sc.noise_sd = get<double>(s, "noise_sd", "synth", sc.noise_sd);
            sc.market_vol = get<double>(s, "market_vol", "synth", sc.market_vol);
            sc.mu0 = get<double>(s, "mu0", "synth", sc.mu0);
            sc.log_cap_sd = get<double>(s, "log_cap_sd", "synth", sc.log_cap_sd);
            sc.seed = get<std::uint64_t>(s, "seed", "synth", sc.seed);
            sc.first_month = get<std::string>(s, "first_month", "synth", sc.first_month);
            sc.validate();
            c.synth = sc;
        }
        if (c.panel_path.empty() && !c.synth) throw ConfigError("config needs panel.path or a synth block");
        if (j.contains("utility")) {
            detail::check_keys(j.at("utility"), "utility", {"kind", "gamma", "g", "Q"});
            c.utility = persist::utility_from_json(j.at("utility"));
        }
        if (j.contains("prior")) {
            const auto& p = j.at("prior");
            detail::check_keys(p, "prior", {"mean", "covariance"});
            PriorSpec ps{persist::vector_from_json(p.at("mean")), persist::matrix_from_json(p.at("covariance"))};
            ps.validate();
            c.prior = ps;
        }
        if (j.contains("proposal")) {
            const auto& p = j.at("proposal");
            detail::check_keys(p, "proposal", {"alpha", "scale", "scales", "auto_calibrate", "band", "pilot_sweeps", "max_rounds"});
            c.alpha = get<double>(p, "alpha", "proposal", c.alpha);
            c.scale = get<double>(p, "scale", "proposal", c.scale);
            if (p.contains("scales")) c.scales = persist::vector_from_json(p.at("scales"));
            c.auto_calibrate = get<bool>(p, "auto_calibrate", "proposal", c.auto_calibrate);
            if (p.contains("band")) {
                const auto band = get<std::vector<double>>(p, "band", "proposal", {});
                if (band.size() != 2) throw ConfigError("proposal.band must be [low, high]");
                c.calibration.band_low = band[0];
                c.calibration.band_high = band[1];
            }
            c.calibration.pilot_sweeps = get<std::size_t>(p, "pilot_sweeps", "proposal", c.calibration.pilot_sweeps);
            c.calibration.max_rounds = get<std::size_t>(p, "max_rounds", "proposal", c.calibration.max_rounds);
        }
        if (!(c.alpha > 1.0 && c.alpha <= 2.0)) throw ConfigError("proposal.alpha must lie in (1, 2]");
        if (!(c.scale > 0.0)) throw ConfigError("proposal.scale must be positive");
        c.lambda_grid = get<std::vector<double>>(j, "lambda_grid", "config", c.lambda_grid);
        validate_grid(c.lambda_grid);
        if (j.contains("window")) {
            const auto& w = j.at("window");
            detail::check_keys(w, "window", {"length", "end_months"});
            c.window_length = get<std::size_t>(w, "length", "window", c.window_length);
            c.end_months = get<std::vector<std::string>>(w, "end_months", "window", {});
        }
        c.oos_horizon = get<std::size_t>(j, "oos_horizon", "config", c.oos_horizon);
        if (j.contains("sampler")) {
            const auto& s = j.at("sampler");
            detail::check_keys(s, "sampler", {"burn_in", "keep", "chains"});
            c.sampler.burn_in = get<std::size_t>(s, "burn_in", "sampler", c.sampler.burn_in);
            c.sampler.keep = get<std::size_t>(s, "keep", "sampler", c.sampler.keep);
            c.chains = get<std::size_t>(s, "chains", "sampler", c.chains);
        }
        if (c.sampler.keep < 2) throw ConfigError("sampler.keep must be at least 2");
        if (c.chains < 1) throw ConfigError("sampler.chains must be at least 1");
        c.seed = get<std::uint64_t>(j, "seed", "config", c.seed);
        c.workers = get<std::size_t>(j, "workers", "config", c.workers);
        c.benchmark = parse_weight_scheme(get<std::string>(j, "benchmark", "config", "value"));
        if (j.contains("factors") && !j.at("factors").is_null()) {
            const auto& f = j.at("factors");
            detail::check_keys(f, "factors", {"path", "lag"});
            FactorSpec fsp;
            fsp.path = detail::resolve(base_dir, get<std::string>(f, "path", "factors", ""));
            if (fsp.path.empty()) throw ConfigError("factors.path is required when factors are given");
            if (f.contains("lag") && !f.at("lag").is_null()) fsp.lag = get<std::size_t>(f, "lag", "factors", 0);
            c.factors = fsp;
        }
        c.output = get<std::string>(j, "output", "config", "out");
        c.density_points = get<std::size_t>(j, "density_points", "config", c.density_points);
        if (c.oos_horizon < 2) throw ConfigError("oos_horizon must be at least 2 months");
        if (c.window_length < 2) throw ConfigError("window.length must be at least 2 months");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

/// Canonical description of the effective configuration (output directory
/// excluded), used for the config hash.
inline json effective_json(const RunConfig& c) {
    json j;
    j["panel"] = {{"path", c.panel_path.string()},
                  {"schema",
                   {{"month", c.schema.month},
                    {"asset_id", c.schema.asset_id},
                    {"characteristics", c.schema.characteristics},
                    {"market_cap", c.schema.market_cap},
                    {"next_return", c.schema.next_return}}}};
    if (c.synth) {
        const auto& s = *c.synth;
        j["synth"] = {{"N", s.N}, {"T", s.T}, {"K", s.K}, {"signal", persist::to_json(s.signal)},
                      {"noise_sd", s.noise_sd}, {"market_vol", s.market_vol}, {"mu0", s.mu0},
                      {"log_cap_sd", s.log_cap_sd}, {"seed", s.seed}, {"first_month", s.first_month}};
    }
    j["utility"] = persist::utility_to_json(c.utility);
    if (c.prior) j["prior"] = {{"mean", persist::to_json(c.prior->mean)}, {"covariance", persist::to_json(c.prior->covariance)}};
    j["proposal"] = {{"alpha", c.alpha},
                     {"scale", c.scale},
                     {"scales", c.scales ? persist::to_json(*c.scales) : json(nullptr)},
                     {"auto_calibrate", c.auto_calibrate},
                     {"band", {c.calibration.band_low, c.calibration.band_high}},
                     {"pilot_sweeps", c.calibration.pilot_sweeps},
                     {"max_rounds", c.calibration.max_rounds}};
    j["lambda_grid"] = c.lambda_grid;
    j["window"] = {{"length", c.window_length}, {"end_months", c.end_months}};
    j["oos_horizon"] = c.oos_horizon;
    j["sampler"] = {{"burn_in", c.sampler.burn_in}, {"keep", c.sampler.keep}, {"chains", c.chains}};
    j["seed"] = c.seed;
    j["benchmark"] = detail::scheme_name(c.benchmark);
    j["factors"] = c.factors ? json{{"path", c.factors->path.string()},
                                    {"lag", c.factors->lag ? json(*c.factors->lag) : json(nullptr)}}
                             : json(nullptr);
    j["density_points"] = c.density_points;
    return j;
}

inline std::string config_hash(const RunConfig& c) { return io::hex64(io::fnv1a(effective_json(c).dump())); }

// ---------------------------------------------------------------------------
// Layout.

inline fs::path synthetic_panel_path(const RunConfig& c) { return c.output / "synthetic_panel.csv"; }
inline fs::path window_dir(const RunConfig& c, const std::string& end) { return c.output / ("window_" + end); }
inline fs::path chain_path(const RunConfig& c, const std::string& end, std::size_t i) {
    return window_dir(c, end) / ("chain_" + std::to_string(i) + ".csv");
}

inline std::uint64_t window_seed(const RunConfig& c, const std::string& end) {
    return mix_seed(c.seed, io::fnv1a(end));
}

// ---------------------------------------------------------------------------
// Inputs.

/// Writes the generated panel for a synth block.
inline fs::path stage_synth(const RunConfig& c) {
    if (!c.synth) throw ConfigError("synth stage needs a synth block in the config");
    const fs::path out = c.panel_path.empty() ? synthetic_panel_path(c) : c.panel_path;
    io::write_atomic(out, panel_to_csv(generate(*c.synth)));
    return out;
}

/// The configured panel: the panel file, else a previously written synthetic
/// panel, else a freshly generated one.
inline CharacteristicPanel load_input_panel(const RunConfig& c) {
    if (!c.panel_path.empty()) {
        if (!fs::exists(c.panel_path)) {
            if (c.synth) throw ConfigError("panel file not found: " + c.panel_path.string() + " (run the synth stage first)");
            throw ConfigError("panel file not found: " + c.panel_path.string());
        }
        return load_panel(c.panel_path, c.schema);
    }
    if (fs::exists(synthetic_panel_path(c))) return load_panel(synthetic_panel_path(c), c.schema);
    return generate(*c.synth);
}

inline void check_factor_file(const RunConfig& c) {
    if (c.factors && !fs::exists(c.factors->path))
        throw ConfigError("factor file not found: " + c.factors->path.string());
}

/// Window end months: configured, or the latest month leaving a full OOS horizon.
inline std::vector<std::string> resolve_end_months(const RunConfig& c, const CharacteristicPanel& panel) {
    if (!c.end_months.empty()) {
        for (const auto& m : c.end_months) (void)panel.index_of(m);
        return c.end_months;
    }
    if (panel.months.size() <= c.oos_horizon)
        throw WindowError("panel has " + std::to_string(panel.months.size()) + " months, too few for a " +
                          std::to_string(c.oos_horizon) + "-month out-of-sample horizon");
    return {panel.months[panel.months.size() - 1 - c.oos_horizon].month};
}

inline PriorSpec prior_for(const RunConfig& c, Eigen::Index K) {
    if (!c.prior) return PriorSpec::standard(K);
    if (c.prior->dim() != K) throw ConfigError("prior dimension does not match the number of characteristics");
    return *c.prior;
}

inline ProposalSpec initial_proposal(const RunConfig& c, Eigen::Index K) {
    ProposalSpec p = c.scales ? ProposalSpec{c.alpha, *c.scales} : ProposalSpec::uniform(K, c.scale, c.alpha);
    if (p.scales.size() != K) throw ConfigError("proposal.scales needs one entry per characteristic");
    p.validate(K);
    return p;
}

inline Eigen::Index objective_dim(const RunConfig& c, const CharacteristicPanel& panel) {
    return c.utility.kind == UtilityKind::quadratic_oracle ? c.utility.g.size()
                                                           : static_cast<Eigen::Index>(panel.num_characteristics());
}

inline ExpectedUtility objective_for(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end) {
    if (c.utility.kind == UtilityKind::quadratic_oracle) return ExpectedUtility({}, c.utility);
    return ExpectedUtility(window(panel, end, c.window_length, c.benchmark), c.utility);
}

// ---------------------------------------------------------------------------
// Stages. Each reads its inputs from disk so staged and one-shot runs agree.

inline SweepResult stage_sweep(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end) {
    const auto obj = objective_for(c, panel, end);
    const Eigen::Index K = obj.dim();
    SweepOptions opt;
    opt.sampler = c.sampler;
    opt.calibrate = c.auto_calibrate;
    opt.calibration = c.calibration;
    opt.workers = c.workers;
    opt.base_seed = window_seed(c, end);
    auto res = sweep(obj, prior_for(c, K), initial_proposal(c, K), c.lambda_grid, opt);
    for (auto& r : res.runs) r.chain.window_id = end;
    const fs::path dir = window_dir(c, end);
    io::write_atomic(dir / "frontier.csv", persist::frontier_csv(res.frontier));
    json j = persist::sweep_to_json(res);
    j["window"] = {{"end_month", end}, {"length", c.window_length}, {"seed", window_seed(c, end)}};
    j["utility"] = persist::utility_to_json(c.utility);
    io::write_atomic(dir / "sweep.json", j.dump(2) + "\n");
    return res;
}

inline json read_json(const fs::path& p, const std::string& needed_by) {
    if (!fs::exists(p)) throw ConfigError(needed_by + " needs " + p.string() + " (run the earlier stage first)");
    try {
        return json::parse(io::read_file(p));
    } catch (const json::parse_error& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

inline std::vector<Chain> stage_sample(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end) {
    const json sw = read_json(window_dir(c, end) / "sweep.json", "sample");
    const double lambda_star = sw.at("lambda_star").get<double>();
    const auto& selected = sw.at("runs").at(sw.at("selected_index").get<std::size_t>());
    ProposalSpec prop{selected.at("proposal").at("alpha").get<double>(),
                      persist::vector_from_json(selected.at("proposal").at("scales"))};
    const auto obj = objective_for(c, panel, end);
    const PriorSpec prior = prior_for(c, obj.dim());
    const std::uint64_t base = lambda_seed(window_seed(c, end), lambda_star);
    auto chains = parallel_map(c.chains, c.workers, [&](std::size_t i) {
        Chain ch = run_chain(obj, lambda_star, prior, prop, c.sampler, mix_seed(base, i + 1));
        ch.window_id = end;
        return ch;
    });
    // Drop chain files from an earlier run with more chains.
    for (std::size_t i = c.chains + 1; fs::exists(chain_path(c, end, i)); ++i) {
        fs::remove(chain_path(c, end, i));
        fs::remove(fs::path(chain_path(c, end, i)).replace_extension(".json"));
    }
    for (std::size_t i = 0; i < chains.size(); ++i) persist::write_chain(chain_path(c, end, i + 1), chains[i], c.utility);
    return chains;
}

inline std::vector<Chain> read_chains(const RunConfig& c, const std::string& end, const std::string& needed_by) {
    std::vector<Chain> chains;
    for (std::size_t i = 1; fs::exists(chain_path(c, end, i)); ++i) chains.push_back(persist::read_chain(chain_path(c, end, i)));
    if (chains.empty())
        throw ConfigError(needed_by + " needs chain files in " + window_dir(c, end).string() + " (run the sample stage first)");
    return chains;
}

inline Eigen::MatrixXd pooled_draws(const std::vector<Chain>& chains) {
    Eigen::Index rows = 0;
    for (const auto& ch : chains) rows += ch.size();
    Eigen::MatrixXd d(rows, chains.front().dim());
    Eigen::Index at = 0;
    for (const auto& ch : chains) {
        d.middleRows(at, ch.size()) = ch.draws;
        at += ch.size();
    }
    return d;
}

inline DiagnosticsReport stage_diagnose(const RunConfig& c, const std::string& end) {
    const auto chains = read_chains(c, end, "diagnose");
    const auto rep = diagnose(chains);
    json j = persist::diagnostics_json(rep, chains);
    j["window"] = end;
    io::write_atomic(window_dir(c, end) / "diagnostics.json", j.dump(2) + "\n");
    return rep;
}

/// Risk-free series for the given months: from the factor file when one is
/// configured, else zero.
inline Eigen::VectorXd risk_free_for(const RunConfig& c, const Window& months) {
    if (!c.factors) return {};
    check_factor_file(c);
    std::vector<std::string> ids;
    for (const auto& s : months) ids.push_back(s.month);
    return load_factor_csv(c.factors->path).select(ids).risk_free;
}

struct PredictiveArtifacts {
    Eigen::MatrixXd paths;
    Eigen::VectorXd decision;
    PredictiveSummary summary;
};

inline Window oos_months(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end,
                         WeightScheme scheme) {
    Window oos = months_after(panel, end, c.oos_horizon, scheme);
    if (oos.size() < 2)
        throw WindowError("out-of-sample period after " + end + " has " + std::to_string(oos.size()) +
                          " months; at least 2 are needed");
    return oos;
}

inline PredictiveArtifacts predictive_paths(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end,
                                            const std::vector<Chain>& chains) {
    const Window oos = oos_months(c, panel, end, c.benchmark);
    const Eigen::MatrixXd draws = pooled_draws(chains);
    PredictiveArtifacts a;
    a.paths = oos_paths(draws, oos);
    const Eigen::VectorXd rf = risk_free_for(c, oos);
    a.summary = predictive_summary(a.paths, c.utility, rf);
    const Theta mean = draws.colwise().mean().transpose();
    a.decision = oos_paths(mean.transpose(), oos).row(0).transpose();
    a.summary.decision = path_stats(a.decision, c.utility, rf);
    a.summary.benchmark_value = path_stats(benchmark_path(oos_months(c, panel, end, WeightScheme::value)), c.utility, rf);
    a.summary.benchmark_equal = path_stats(benchmark_path(oos_months(c, panel, end, WeightScheme::equal)), c.utility, rf);
    return a;
}

inline PredictiveSummary stage_predict(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end) {
    const auto chains = read_chains(c, end, "predict");
    auto a = predictive_paths(c, panel, end, chains);
    const fs::path dir = window_dir(c, end);
    io::write_atomic(dir / "predictive_summary.csv", persist::summary_csv(a.summary));
    const Window oos = oos_months(c, panel, end, c.benchmark);
    io::write_atomic(dir / "density.csv", persist::density_csv(density_grid(a.paths, benchmark_path(oos), c.density_points)));
    return a.summary;
}

inline AttributionSummary stage_attribute(const RunConfig& c, const CharacteristicPanel& panel, const std::string& end) {
    if (!c.factors) throw ConfigError("attribute stage needs a factors block in the config");
    check_factor_file(c);
    const auto chains = read_chains(c, end, "attribute");
    const auto a = predictive_paths(c, panel, end, chains);
    std::vector<std::string> ids;
    for (const auto& s : oos_months(c, panel, end, c.benchmark)) ids.push_back(s.month);
    const FactorPanel fp = load_factor_csv(c.factors->path).select(ids);
    const auto att = posterior_attribution(a.paths, fp, c.factors->lag, a.decision);
    io::write_atomic(window_dir(c, end) / "attribution.csv", persist::attribution_csv(att));
    return att;
}

// ---------------------------------------------------------------------------
// Manifest.

inline constexpr const char* kWindowFiles[] = {"frontier.csv",      "sweep.json",             "diagnostics.json",
                                               "predictive_summary.csv", "density.csv", "attribution.csv"};

/// Lists every output present under the output directory with content
/// hashes, the config hash, and the seeds used. No timestamps.
inline json write_manifest(const RunConfig& c, const std::vector<std::string>& ends) {
    json files = json::array();
    auto add = [&](const fs::path& p) {
        if (!fs::exists(p)) return;
        const std::string content = io::read_file(p);
        files.push_back({{"path", fs::relative(p, c.output).generic_string()},
                         {"bytes", content.size()},
                         {"fnv1a", io::hex64(io::fnv1a(content))}});
    };
    if (c.panel_path.empty()) add(synthetic_panel_path(c));
    json windows = json::array();
    for (const auto& end : ends) {
        const fs::path dir = window_dir(c, end);
        for (const char* f : kWindowFiles) add(dir / f);
        json w{{"end_month", end}, {"window_seed", window_seed(c, end)}};
        if (fs::exists(dir / "sweep.json")) {
            const json sw = json::parse(io::read_file(dir / "sweep.json"));
            w["lambda_star"] = sw.at("lambda_star");
            json seeds = json::array();
            for (const auto& r : sw.at("runs")) seeds.push_back({{"lambda", r.at("lambda")}, {"seed", r.at("seed")}});
            w["sweep_seeds"] = seeds;
        }
        json chain_seeds = json::array();
        for (std::size_t i = 1; fs::exists(chain_path(c, end, i)); ++i) {
            add(chain_path(c, end, i));
            const auto side = fs::path(chain_path(c, end, i)).replace_extension(".json");
            add(side);
            chain_seeds.push_back(json::parse(io::read_file(side)).at("seed"));
        }
        w["chain_seeds"] = chain_seeds;
        windows.push_back(std::move(w));
    }
    json m{{"config_hash", config_hash(c)}, {"seed", c.seed}, {"windows", windows}, {"files", files}};
    io::write_atomic(c.output / "manifest.json", m.dump(2) + "\n");
    return m;
}

/// Full pipeline: optional synth, then per window sweep, sample, diagnose,
/// predict and (with factors) attribute; finally the manifest.
inline json run(const RunConfig& c) {
    check_factor_file(c);
    if (c.synth && c.panel_path.empty()) stage_synth(c);
    const auto panel = load_input_panel(c);
    const auto ends = resolve_end_months(c, panel);
    for (const auto& end : ends) {
        stage_sweep(c, panel, end);
        stage_sample(c, panel, end);
        stage_diagnose(c, end);
        stage_predict(c, panel, end);
        if (c.factors) stage_attribute(c, panel, end);
    }
    return write_manifest(c, ends);
}

}  // namespace gppp::pipeline
