// gppp: batch front end for Gibbs-posterior portfolio policy runs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gppp/pipeline.hpp"

namespace fs = std::filesystem;
using namespace gppp;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;
};

pipeline::RunConfig effective_config(const Globals& g) {
    if (g.config.empty()) throw ConfigError("no config given (use --config or GPPP_CONFIG)");
    auto c = pipeline::load_config(g.config);
    if (g.seed) c.seed = *g.seed;
    if (g.workers) c.workers = *g.workers;
    if (!g.out.empty()) c.output = g.out;
    if (c.workers < 1) throw ConfigError("--workers must be at least 1");
    return c;
}

void write_error_report(const fs::path& out, const std::string& stage, const std::string& kind,
                        const std::string& message, int code) {
    if (out.empty()) return;
    try {
        json j{{"stage", stage}, {"kind", kind}, {"message", message}, {"exit_code", code}};
        io::write_atomic(out / "error.json", j.dump(2) + "\n");
    } catch (...) {
    }
}

const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::numeric: return "numeric";
    }
    return "numeric";
}

std::string config_defaults() {
    const pipeline::RunConfig d;
    const SynthConfig s;
    std::string grid;
    for (double v : d.lambda_grid) grid += (grid.empty() ? "" : ", ") + io::format_double(v);
    auto num = [](auto v) { return std::to_string(v); };
    std::string t = "Config file (JSON) keys and defaults:\n";
    t += "  panel.path                  panel CSV, relative to the config file\n";
    t += "  panel.schema                month=month asset_id=asset_id market_cap=market_cap\n"
         "                              next_return=next_return characteristics=all other columns\n";
    t += "  synth.{N,T,K}               " + num(s.N) + ", " + num(s.T) + ", " + num(s.K) + "\n";
    t += "  synth.signal                zeros\n";
    t += "  synth.noise_sd              " + io::format_double(s.noise_sd) + "\n";
    t += "  synth.market_vol            " + io::format_double(s.market_vol) + "\n";
    t += "  synth.mu0                   " + io::format_double(s.mu0) + "\n";
    t += "  synth.log_cap_sd            " + io::format_double(s.log_cap_sd) + "\n";
    t += "  synth.seed                  " + num(s.seed) + "\n";
    t += "  synth.first_month           " + s.first_month + "\n";
    t += "  utility.kind                log (log | power | quadratic-oracle; gamma, g, Q as needed)\n";
    t += "  prior.{mean,covariance}     N(0, I)\n";
    t += "  proposal.alpha              " + io::format_double(d.alpha) + "\n";
    t += "  proposal.scale              " + io::format_double(d.scale) + " (or proposal.scales, one per characteristic)\n";
    t += "  proposal.auto_calibrate     true\n";
    t += "  proposal.band               [" + io::format_double(d.calibration.band_low) + ", " +
         io::format_double(d.calibration.band_high) + "]\n";
    t += "  proposal.pilot_sweeps       " + num(d.calibration.pilot_sweeps) + "\n";
    t += "  proposal.max_rounds         " + num(d.calibration.max_rounds) + "\n";
    t += "  lambda_grid                 [" + grid + "]\n";
    t += "  window.length               " + num(d.window_length) + " months\n";
    t += "  window.end_months           latest month leaving a full out-of-sample horizon\n";
    t += "  oos_horizon                 " + num(d.oos_horizon) + " months\n";
    t += "  sampler.burn_in             " + num(d.sampler.burn_in) + "\n";
    t += "  sampler.keep                " + num(d.sampler.keep) + "\n";
    t += "  sampler.chains              " + num(d.chains) + "\n";
    t += "  seed                        " + num(d.seed) + "\n";
    t += "  workers                     " + num(d.workers) + "\n";
    t += "  benchmark                   value (value | equal)\n";
    t += "  factors.path                none; month,rf,factor... CSV, relative to the config file\n";
    t += "  factors.lag                 floor(4 (M/100)^(2/9))\n";
    t += "  output                      out\n";
    t += "  density_points              " + num(d.density_points) + "\n";
    return t;
}

using WindowStage = void (*)(const pipeline::RunConfig&, const CharacteristicPanel&, const std::string&);

int per_window(const pipeline::RunConfig& c, WindowStage stage) {
    const auto panel = pipeline::load_input_panel(c);
    const auto ends = pipeline::resolve_end_months(c, panel);
    for (const auto& end : ends) stage(c, panel, end);
    pipeline::write_manifest(c, ends);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gppp: Gibbs-posterior parametric portfolio policies.\n"
                 "Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure."};
    app.footer(config_defaults());
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();

    Globals g;
    std::uint64_t seed_value = 1;
    std::size_t workers_value = 1;
    app.add_option("--config", g.config, "JSON run configuration")->envname("GPPP_CONFIG");
    auto* seed_opt = app.add_option("--seed", seed_value, "base seed; overrides the config's seed")
                         ->envname("GPPP_SEED")
                         ->default_str("config value (1 if unset)");
    auto* workers_opt = app.add_option("--workers", workers_value, "worker threads for lambda and chain jobs")
                            ->envname("GPPP_WORKERS")
                            ->default_str("config value (1 if unset)");
    app.add_option("--out", g.out, "output directory; overrides the config's output")
        ->envname("GPPP_OUT")
        ->default_str("config value (out if unset)");

    std::string stage = "startup";

    std::string ingest_path;
    auto* ingest = app.add_subcommand("ingest-check", "validate a panel CSV and print a summary");
    ingest->add_option("path", ingest_path, "panel CSV (default: the config's panel.path)");

    app.add_subcommand("synth", "write the synthetic panel described by the config's synth block");
    app.add_subcommand("sweep", "lambda sweep, frontier and lambda* for each window");
    app.add_subcommand("sample", "production chains at lambda* from the persisted sweep");
    std::vector<std::string> chain_files;
    auto* diag = app.add_subcommand("diagnose", "MPSRF, ESS, acceptance rates and correlations");
    diag->add_option("chains", chain_files, "chain CSV files; when given, the report goes to stdout");
    app.add_subcommand("predict", "posterior-predictive out-of-sample summaries and densities");
    app.add_subcommand("attribute", "factor attribution of the predictive return paths");
    app.add_subcommand("run", "synth (if configured), sweep, sample, diagnose, predict, attribute");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;
    if (workers_opt->count() > 0) g.workers = workers_value;

    const std::string cmd = app.get_subcommands().front()->get_name();
    stage = cmd;
    fs::path out_dir = g.out;
    try {
        if (cmd == "ingest-check") {
            fs::path path = ingest_path;
            PanelSchema schema;
            if (!g.config.empty()) {
                const auto c = effective_config(g);
                schema = c.schema;
                if (path.empty()) path = c.panel_path;
            }
            if (path.empty()) throw ConfigError("ingest-check needs a panel path");
            const auto panel = load_panel(path, schema);
            std::size_t rows = 0;
            for (const auto& m : panel.months) rows += static_cast<std::size_t>(m.size());
            json j{{"path", path.string()},
                   {"months", panel.months.size()},
                   {"first_month", panel.months.front().month},
                   {"last_month", panel.months.back().month},
                   {"rows", rows},
                   {"characteristics", panel.characteristic_names}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (cmd == "diagnose" && !chain_files.empty()) {
            std::vector<Chain> chains;
            for (const auto& f : chain_files) chains.push_back(persist::read_chain(f));
            const auto rep = diagnose(chains);
            std::cout << persist::diagnostics_json(rep, chains).dump(2) << "\n";
            return 0;
        }

        const auto c = effective_config(g);
        out_dir = c.output;
        if (cmd == "synth") {
            const auto p = pipeline::stage_synth(c);
            std::cout << p.string() << "\n";
            return 0;
        }
        if (cmd == "run") {
            const auto m = pipeline::run(c);
            std::cout << (c.output / "manifest.json").string() << "\n";
            (void)m;
            return 0;
        }
        if (cmd == "attribute" || cmd == "predict") pipeline::check_factor_file(c);
        if (cmd == "sweep")
            return per_window(c, [](const auto& c, const auto& p, const auto& e) { pipeline::stage_sweep(c, p, e); });
        if (cmd == "sample")
            return per_window(c, [](const auto& c, const auto& p, const auto& e) { pipeline::stage_sample(c, p, e); });
        if (cmd == "diagnose")
            return per_window(c, [](const auto& c, const auto&, const auto& e) { pipeline::stage_diagnose(c, e); });
        if (cmd == "predict")
            return per_window(c, [](const auto& c, const auto& p, const auto& e) { pipeline::stage_predict(c, p, e); });
        if (cmd == "attribute")
            return per_window(c, [](const auto& c, const auto& p, const auto& e) { pipeline::stage_attribute(c, p, e); });
        throw ConfigError("unknown subcommand " + cmd);
    } catch (const Error& e) {
        const int code = exit_code(e.kind());
        std::fprintf(stderr, "gppp %s: %s error: %s\n", stage.c_str(), kind_name(e.kind()), e.what());
        write_error_report(out_dir, stage, kind_name(e.kind()), e.what(), code);
        return code;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "gppp %s: data error: %s\n", stage.c_str(), e.what());
        write_error_report(out_dir, stage, "data", e.what(), 3);
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gppp %s: numeric error: %s\n", stage.c_str(), e.what());
        write_error_report(out_dir, stage, "numeric", e.what(), 4);
        return 4;
    }
}
