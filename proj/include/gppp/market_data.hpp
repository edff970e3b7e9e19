#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gppp/error.hpp"
#include "gppp/io.hpp"

namespace gppp {

/// Column mapping for panel CSV files. An empty characteristic list means
/// "every column not otherwise named".
struct PanelSchema {
    std::string month = "month";
    std::string asset_id = "asset_id";
    std::vector<std::string> characteristics;
    std::string market_cap = "market_cap";
    std::string next_return = "next_return";
};

/// One month's cross-section.
struct MonthData {
    std::string month;
    std::vector<std::string> asset_ids;
    Eigen::MatrixXd characteristics;  // N_t x K, raw
    Eigen::VectorXd market_caps;
    Eigen::VectorXd next_returns;     // simple decimal returns over the following month

    Eigen::Index size() const { return characteristics.rows(); }
};

struct CharacteristicPanel {
    std::vector<std::string> characteristic_names;
    std::vector<MonthData> months;  // ascending by month id

    std::size_t num_characteristics() const { return characteristic_names.size(); }

    std::size_t index_of(const std::string& month) const {
        const auto it = std::lower_bound(months.begin(), months.end(), month,
                                         [](const MonthData& m, const std::string& id) { return m.month < id; });
        if (it == months.end() || it->month != month) throw WindowError("unknown month: " + month);
        return static_cast<std::size_t>(it - months.begin());
    }

    const MonthData& at(const std::string& month) const { return months[index_of(month)]; }
};

/// Characteristics standardized within the month, ready for the weight rule.
struct StandardizedSlice {
    std::string month;
    Eigen::MatrixXd X;  // zero-mean, unit sample-sd columns
    Eigen::VectorXd benchmark_weights;
    Eigen::VectorXd next_returns;

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index num_characteristics() const { return X.cols(); }
};

using Window = std::vector<StandardizedSlice>;

enum class WeightScheme { value, equal };

inline WeightScheme parse_weight_scheme(const std::string& name) {
    if (name == "value") return WeightScheme::value;
    if (name == "equal") return WeightScheme::equal;
    throw ConfigError("unknown benchmark scheme '" + name + "' (expected value|equal)");
}

/// Checks every panel invariant; throws DataError naming the month and asset.
inline void validate_panel(const CharacteristicPanel& panel) {
    const auto K = static_cast<Eigen::Index>(panel.num_characteristics());
    if (K == 0) throw SchemaError("panel has no characteristic columns");
    for (std::size_t m = 0; m < panel.months.size(); ++m) {
        const MonthData& md = panel.months[m];
        if (m > 0 && !(panel.months[m - 1].month < md.month))
            throw DataError("months not strictly ascending at " + md.month);
        const Eigen::Index n = md.size();
        if (md.characteristics.cols() != K)
            throw DataError("month " + md.month + ": characteristic count differs from K");
        if (static_cast<Eigen::Index>(md.asset_ids.size()) != n || md.market_caps.size() != n ||
            md.next_returns.size() != n)
            throw DataError("month " + md.month + ": array lengths disagree");
        if (n < K + 1)
            throw DataError("month " + md.month + ": " + std::to_string(n) + " assets, need at least K+1 = " +
                            std::to_string(K + 1));
        std::set<std::string> seen;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& id = md.asset_ids[static_cast<std::size_t>(i)];
            if (!seen.insert(id).second) throw DuplicateKeyError("duplicate asset " + id + " in month " + md.month);
            if (!(md.market_caps(i) > 0.0) || !std::isfinite(md.market_caps(i)))
                throw DataError("month " + md.month + ", asset " + id + ": market_cap must be positive");
            if (!(md.next_returns(i) > -1.0) || !std::isfinite(md.next_returns(i)))
                throw DataError("month " + md.month + ", asset " + id + ": next_return must exceed -1");
            if (!md.characteristics.row(i).allFinite())
                throw DataError("month " + md.month + ", asset " + id + ": non-finite characteristic");
        }
    }
}

/// Parses panel CSV text. `origin` only labels error messages.
inline CharacteristicPanel parse_panel_csv(const std::string& text, PanelSchema schema,
                                           const std::string& origin = "<memory>") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(origin + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = io::split_csv_line(line);
    for (auto& h : header) h = io::trim(h);

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
    auto require = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end()) throw SchemaError(origin + ": missing column '" + name + "'");
        return it->second;
    };
    const std::size_t c_month = require(schema.month);
    const std::size_t c_asset = require(schema.asset_id);
    const std::size_t c_cap = require(schema.market_cap);
    const std::size_t c_ret = require(schema.next_return);
    if (schema.characteristics.empty()) {
        for (const auto& h : header)
            if (h != schema.month && h != schema.asset_id && h != schema.market_cap && h != schema.next_return)
                schema.characteristics.push_back(h);
    }
    if (schema.characteristics.empty()) throw SchemaError(origin + ": no characteristic columns");
    std::vector<std::size_t> c_chars;
    for (const auto& name : schema.characteristics) c_chars.push_back(require(name));
    const std::size_t K = c_chars.size();

    struct Row {
        std::string asset;
        std::vector<double> x;
        double cap;
        double ret;
    };
    std::map<std::string, std::vector<Row>> by_month;
    std::set<std::pair<std::string, std::string>> keys;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        const auto fields = io::split_csv_line(line);
        const std::string where = origin + ": row " + std::to_string(lineno);
        if (fields.size() != header.size())
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        Row r;
        const std::string month = io::trim(fields[c_month]);
        r.asset = io::trim(fields[c_asset]);
        if (month.empty() || r.asset.empty()) throw ParseError(where + ": empty month or asset id");
        auto num = [&](std::size_t c, const std::string& name) {
            double v;
            if (!io::parse_double(fields[c], v))
                throw ParseError(where + ": missing or non-finite value in column '" + name + "'");
            return v;
        };
        r.x.resize(K);
        for (std::size_t k = 0; k < K; ++k) r.x[k] = num(c_chars[k], schema.characteristics[k]);
        r.cap = num(c_cap, schema.market_cap);
        r.ret = num(c_ret, schema.next_return);
        if (!(r.cap > 0.0)) throw DataError(where + ": market_cap must be positive");
        if (!(r.ret > -1.0)) throw DataError(where + ": next_return must exceed -1");
        if (!keys.emplace(month, r.asset).second)
            throw DuplicateKeyError(where + ": duplicate (month, asset) = (" + month + ", " + r.asset + ")");
        by_month[month].push_back(std::move(r));
    }

    CharacteristicPanel panel;
    panel.characteristic_names = schema.characteristics;
    for (auto& [month, rows] : by_month) {
        MonthData md;
        md.month = month;
        const auto n = static_cast<Eigen::Index>(rows.size());
        md.characteristics.resize(n, static_cast<Eigen::Index>(K));
        md.market_caps.resize(n);
        md.next_returns.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Row& r = rows[static_cast<std::size_t>(i)];
            md.asset_ids.push_back(r.asset);
            for (std::size_t k = 0; k < K; ++k) md.characteristics(i, static_cast<Eigen::Index>(k)) = r.x[k];
            md.market_caps(i) = r.cap;
            md.next_returns(i) = r.ret;
        }
        panel.months.push_back(std::move(md));
    }
    validate_panel(panel);
    return panel;
}

inline CharacteristicPanel load_panel(const std::filesystem::path& path, const PanelSchema& schema = {}) {
    if (!std::filesystem::exists(path)) throw ConfigError("panel file not found: " + path.string());
    return parse_panel_csv(io::read_file(path), schema, path.string());
}

inline std::string panel_to_csv(const CharacteristicPanel& panel) {
    std::string out = "month,asset_id";
    for (const auto& n : panel.characteristic_names) out += "," + n;
    out += ",market_cap,next_return\n";
    for (const auto& md : panel.months) {
        for (Eigen::Index i = 0; i < md.size(); ++i) {
            out += md.month + "," + md.asset_ids[static_cast<std::size_t>(i)];
            for (Eigen::Index k = 0; k < md.characteristics.cols(); ++k)
                out += "," + io::format_double(md.characteristics(i, k));
            out += "," + io::format_double(md.market_caps(i)) + "," + io::format_double(md.next_returns(i)) + "\n";
        }
    }
    return out;
}

/// Centers each column and scales it to unit sample standard deviation.
inline Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& raw, const std::vector<std::string>& names = {},
                                           const std::string& month = {}) {
    const Eigen::Index n = raw.rows();
    if (n < 2) throw DegenerateCharacteristicError("month " + month + ": need at least two assets");
    Eigen::MatrixXd X(n, raw.cols());
    for (Eigen::Index k = 0; k < raw.cols(); ++k) {
        const double mu = raw.col(k).mean();
        Eigen::VectorXd centered = raw.col(k).array() - mu;
        const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
        const double magnitude = std::max(1.0, raw.col(k).cwiseAbs().maxCoeff());
        if (!(sd > 1e-13 * magnitude)) {
            const std::string label =
                static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)] : std::to_string(k);
            throw DegenerateCharacteristicError("month " + month + ": characteristic '" + label +
                                                "' has zero cross-sectional variance");
        }
        X.col(k) = centered / sd;
    }
    return X;
}

inline Eigen::VectorXd benchmark_weights(const MonthData& md, WeightScheme scheme) {
    const Eigen::Index n = md.size();
    if (scheme == WeightScheme::equal) return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    return md.market_caps / md.market_caps.sum();
}

inline Eigen::VectorXd benchmark_weights(const CharacteristicPanel& panel, const std::string& month,
                                         WeightScheme scheme) {
    return benchmark_weights(panel.at(month), scheme);
}

inline StandardizedSlice standardize_slice(const MonthData& md, const std::vector<std::string>& names,
                                           WeightScheme scheme = WeightScheme::value) {
    StandardizedSlice s;
    s.month = md.month;
    s.X = standardize_columns(md.characteristics, names, md.month);
    s.benchmark_weights = benchmark_weights(md, scheme);
    s.next_returns = md.next_returns;
    return s;
}

inline StandardizedSlice standardize_slice(const CharacteristicPanel& panel, const std::string& month,
                                           WeightScheme scheme = WeightScheme::value) {
    return standardize_slice(panel.at(month), panel.characteristic_names, scheme);
}

/// Trailing `length` months ending at (and including) `end_month`.
inline Window window(const CharacteristicPanel& panel, const std::string& end_month, std::size_t length,
                     WeightScheme scheme = WeightScheme::value) {
    if (length == 0) throw WindowError("window length must be positive");
    const std::size_t end = panel.index_of(end_month);
    const std::size_t available = end + 1;
    if (available < length)
        throw WindowError("insufficient history ending " + end_month + ": " + std::to_string(available) + " of " +
                          std::to_string(length) + " months available");
    Window w;
    w.reserve(length);
    for (std::size_t i = available - length; i < available; ++i)
        w.push_back(standardize_slice(panel.months[i], panel.characteristic_names, scheme));
    return w;
}

/// The `horizon` months strictly after `end_month`; fewer if the panel ends first.
inline Window months_after(const CharacteristicPanel& panel, const std::string& end_month, std::size_t horizon,
                           WeightScheme scheme = WeightScheme::value) {
    const std::size_t end = panel.index_of(end_month);
    Window w;
    for (std::size_t i = end + 1; i < panel.months.size() && w.size() < horizon; ++i)
        w.push_back(standardize_slice(panel.months[i], panel.characteristic_names, scheme));
    return w;
}

}  // namespace gppp
