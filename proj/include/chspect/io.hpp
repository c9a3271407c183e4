#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chspect/analyze.hpp"
#include "chspect/coincidence.hpp"
#include "chspect/counts.hpp"
#include "chspect/events.hpp"
#include "chspect/model.hpp"
#include "chspect/qm_oracle.hpp"

namespace chspect::io {

using nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numbers go out in shortest exact round-trip form, so nothing read back can
// differ from what was computed.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("failed reading " + path.string());
    return ss.str();
}

/// Write-temp-then-rename so partially written files never appear.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.good()) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& context) {
    if (!j.is_object()) throw std::invalid_argument(context + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw std::invalid_argument(context + ": unknown field \"" + item.key() + "\"");
        }
    }
}

inline const json& expect_field(const json& j, const std::string& key,
                                const std::string& context) {
    auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(context + ": missing field \"" + key + "\"");
    return *it;
}

// ---------------------------------------------------------------------------
// Settings quad
// ---------------------------------------------------------------------------

inline json quad_to_json(const SettingsQuad& q) {
    return json{{"alpha", q.alpha},
                {"alpha_prime", q.alpha_prime},
                {"beta", q.beta},
                {"beta_prime", q.beta_prime}};
}

inline SettingsQuad quad_from_json(const json& j, const std::string& context) {
    reject_unknown_keys(j, {"alpha", "alpha_prime", "beta", "beta_prime"}, context);
    SettingsQuad q;
    q.alpha = expect_field(j, "alpha", context).get<double>();
    q.alpha_prime = expect_field(j, "alpha_prime", context).get<double>();
    q.beta = expect_field(j, "beta", context).get<double>();
    q.beta_prime = expect_field(j, "beta_prime", context).get<double>();
    q.validate();
    return q;
}

// ---------------------------------------------------------------------------
// Model description files
// ---------------------------------------------------------------------------

inline json model_to_json(const HiddenVariableModel& model, const std::string& kind,
                          double r = 0.0, const SettingsQuad* quad = nullptr) {
    json j;
    j["kind"] = kind;
    j["channel_count"] = model.config.channel_count;
    j["lambda_range"] = json::array({model.config.lambda_min, model.config.lambda_max});
    j["weights"] = model.distribution.weights;
    if (kind == "factorizable") {
        const auto& f = std::get<FactorizableResponse>(model.response);
        j["p_a"] = json{{"alpha", f.p_a[0]}, {"alpha_prime", f.p_a[1]}};
        j["p_b"] = json{{"beta", f.p_b[0]}, {"beta_prime", f.p_b[1]}};
    } else if (kind == "joint") {
        const auto& g = std::get<JointResponse>(model.response);
        json tables;
        for (SettingPair p : all_setting_pairs()) {
            const auto& per_pair = g.table[static_cast<int>(p)];
            json t;
            std::vector<double> both, a_only, b_only, neither;
            for (const OutcomeProbs& q : per_pair) {
                both.push_back(q.both);
                a_only.push_back(q.a_only);
                b_only.push_back(q.b_only);
                neither.push_back(q.neither);
            }
            t["both"] = both;
            t["a_only"] = a_only;
            t["b_only"] = b_only;
            t["neither"] = neither;
            tables[to_string(p)] = t;
        }
        j["joint"] = tables;
    } else if (kind == "qm_channel") {
        j["r"] = r;
        if (quad == nullptr) throw std::invalid_argument("qm_channel model needs a quad");
        j["quad"] = quad_to_json(*quad);
    } else {
        throw std::invalid_argument("unknown model kind: " + kind);
    }
    return j;
}

inline HiddenVariableModel model_from_json(const json& j) {
    const std::string context = "model";
    if (!j.is_object()) throw std::invalid_argument("model: expected a JSON object");
    const std::string kind = expect_field(j, "kind", context).get<std::string>();

    SpectrographConfig config;
    config.channel_count = expect_field(j, "channel_count", context).get<int>();
    const json& range = expect_field(j, "lambda_range", context);
    if (!range.is_array() || range.size() != 2) {
        throw std::invalid_argument("model: lambda_range must be [min, max]");
    }
    config.lambda_min = range[0].get<double>();
    config.lambda_max = range[1].get<double>();

    ChannelDistribution weights;
    weights.weights = expect_field(j, "weights", context).get<std::vector<double>>();

    if (kind == "factorizable") {
        reject_unknown_keys(j, {"kind", "channel_count", "lambda_range", "weights", "p_a", "p_b"},
                            context);
        const json& ja = expect_field(j, "p_a", context);
        const json& jb = expect_field(j, "p_b", context);
        reject_unknown_keys(ja, {"alpha", "alpha_prime"}, "model.p_a");
        reject_unknown_keys(jb, {"beta", "beta_prime"}, "model.p_b");
        FactorizableResponse f;
        f.p_a[0] = expect_field(ja, "alpha", "model.p_a").get<std::vector<double>>();
        f.p_a[1] = expect_field(ja, "alpha_prime", "model.p_a").get<std::vector<double>>();
        f.p_b[0] = expect_field(jb, "beta", "model.p_b").get<std::vector<double>>();
        f.p_b[1] = expect_field(jb, "beta_prime", "model.p_b").get<std::vector<double>>();
        return make_factorizable_model(config, weights, f);
    }
    if (kind == "joint") {
        reject_unknown_keys(j, {"kind", "channel_count", "lambda_range", "weights", "joint"},
                            context);
        const json& tables = expect_field(j, "joint", context);
        reject_unknown_keys(tables, {"AB", "ABp", "ApB", "ApBp"}, "model.joint");
        JointResponse g;
        for (SettingPair p : all_setting_pairs()) {
            const json& t = expect_field(tables, to_string(p), "model.joint");
            reject_unknown_keys(t, {"both", "a_only", "b_only", "neither"}, "model.joint table");
            const auto both = expect_field(t, "both", "joint").get<std::vector<double>>();
            const auto a_only = expect_field(t, "a_only", "joint").get<std::vector<double>>();
            const auto b_only = expect_field(t, "b_only", "joint").get<std::vector<double>>();
            const auto neither = expect_field(t, "neither", "joint").get<std::vector<double>>();
            if (both.size() != a_only.size() || both.size() != b_only.size() ||
                both.size() != neither.size()) {
                throw std::invalid_argument("model.joint: table arrays differ in length");
            }
            auto& per_pair = g.table[static_cast<int>(p)];
            per_pair.resize(both.size());
            for (std::size_t i = 0; i < both.size(); ++i) {
                per_pair[i] = {both[i], a_only[i], b_only[i], neither[i]};
            }
        }
        return make_joint_model(config, weights, g);
    }
    if (kind == "qm_channel") {
        reject_unknown_keys(j, {"kind", "channel_count", "lambda_range", "weights", "r", "quad"},
                            context);
        const double r = expect_field(j, "r", context).get<double>();
        const SettingsQuad quad = quad_from_json(expect_field(j, "quad", context), "model.quad");
        return make_qm_channel_model(config, weights, r, quad);
    }
    throw std::invalid_argument("model: unknown kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// Count tables
// ---------------------------------------------------------------------------

inline json count_table_to_json(const CountTable& table) {
    json j;
    j["K"] = table.channel_count;
    j["N"] = table.pairs_per_run;
    for (SettingPair p : all_setting_pairs()) {
        const ChannelCounts& run = table.run(p);
        json r;
        r["singles_A"] = run.singles_a;
        r["singles_B"] = run.singles_b;
        r["coincidences"] = run.coincidences;
        r["noise"] = run.cross_channel_noise;
        j[to_string(p)] = r;
    }
    return j;
}

inline CountTable count_table_from_json(const json& j) {
    const std::string context = "count table";
    reject_unknown_keys(j, {"K", "N", "AB", "ABp", "ApB", "ApBp"}, context);
    CountTable table;
    table.channel_count = expect_field(j, "K", context).get<int>();
    table.pairs_per_run = expect_field(j, "N", context).get<std::int64_t>();
    for (SettingPair p : all_setting_pairs()) {
        const json& r = expect_field(j, to_string(p), context);
        reject_unknown_keys(r, {"singles_A", "singles_B", "coincidences", "noise"},
                            std::string(context) + "." + to_string(p));
        ChannelCounts& run = table.run(p);
        run.pair = p;
        run.singles_a = expect_field(r, "singles_A", context).get<std::vector<std::int64_t>>();
        run.singles_b = expect_field(r, "singles_B", context).get<std::vector<std::int64_t>>();
        run.coincidences =
            expect_field(r, "coincidences", context).get<std::vector<std::int64_t>>();
        run.cross_channel_noise = expect_field(r, "noise", context).get<std::int64_t>();
        // The wire format carries no separate station totals; a loaded table
        // adopts its channel sums.
        run.total_a = run.sum_singles_a();
        run.total_b = run.sum_singles_b();
    }
    table.validate_shape();
    return table;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json terms_to_json(const ChTerms& t) {
    return json{{"joint_ab", t.joint_ab},     {"joint_abp", t.joint_abp},
                {"joint_apb", t.joint_apb},   {"joint_apbp", t.joint_apbp},
                {"single_b", t.single_b},     {"single_a", t.single_a}};
}

inline json qm_report_to_json(const QmJReport& report) {
    json j;
    j["r2"] = report.r_squared;
    j["quad"] = quad_to_json(report.quad);
    j["terms"] = terms_to_json(report.terms);
    j["J"] = report.j;
    return j;
}

inline json audit_report_to_json(const AuditReport& report) {
    json j;
    j["pass"] = report.pass;
    json violations = json::array();
    for (const AuditViolation& v : report.violations) {
        json item;
        item["feature"] = v.feature;
        item["pair"] = to_string(v.pair);
        if (v.channel >= 0) item["channel"] = v.channel;
        if (!v.station.empty()) item["station"] = v.station;
        item["detail"] = v.detail;
        violations.push_back(item);
    }
    j["violations"] = violations;
    json readings = json::array();
    for (const TotalsReading& r : report.totals_readings) {
        readings.push_back(json{{"pair", to_string(r.pair)},
                                {"sum_singles_A", r.sum_a},
                                {"sum_singles_B", r.sum_b},
                                {"station_total_A", r.total_a},
                                {"station_total_B", r.total_b},
                                {"matches_station_total_A", r.matches_station_total_a},
                                {"matches_station_total_B", r.matches_station_total_b},
                                {"within_emitted_A", r.within_emitted_a},
                                {"within_emitted_B", r.within_emitted_b}});
    }
    j["totals_readings"] = readings;
    return j;
}

inline json j_report_to_json(const JReport& report) {
    json j;
    j["J"] = report.j;
    j["terms"] = terms_to_json(report.terms);
    j["sigma_j"] = report.sigma;
    j["correction"] = report.correction;
    j["gamma2"] = report.partition.gamma2;
    json residuals = json::array();
    for (const ChannelResidual& r : report.residuals) {
        residuals.push_back(
            json{{"channel", r.channel}, {"set", r.gamma_set}, {"value", r.value}});
    }
    j["residuals"] = residuals;
    j["verdicts"] = json{{"audit_pass", report.verdicts.audit_pass},
                         {"ch_holds", report.verdicts.ch_holds},
                         {"spectrograph_holds", report.verdicts.spectrograph_holds}};
    return j;
}

inline json match_summary_to_json(const ChannelCounts& counts, const MatchResult& result,
                                  double window, int channel_count) {
    json j;
    j["parameters"] = json{{"window", window}, {"channel_count", channel_count}};
    j["pair"] = to_string(counts.pair);
    j["singles_A"] = counts.singles_a;
    j["singles_B"] = counts.singles_b;
    j["coincidences"] = counts.coincidences;
    j["noise"] = counts.cross_channel_noise;
    j["matches"] = result.matches.size();
    j["unmatched_A"] = result.unmatched_a.size();
    j["unmatched_B"] = result.unmatched_b.size();
    return j;
}

// ---------------------------------------------------------------------------
// Event stream CSV
// ---------------------------------------------------------------------------

inline std::string events_to_csv(const std::vector<DetectionEvent>& events) {
    std::string out = "timestamp,channel\n";
    for (const DetectionEvent& e : events) {
        out += format_double(e.timestamp);
        out += ',';
        out += std::to_string(e.channel);
        out += '\n';
    }
    return out;
}

inline std::vector<DetectionEvent> events_from_csv(const std::string& text, Station station) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("event CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,channel") {
        throw std::invalid_argument("event CSV: expected header \"timestamp,channel\"");
    }
    std::vector<DetectionEvent> events;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("event CSV: missing comma on line " +
                                        std::to_string(line_no));
        }
        DetectionEvent e;
        e.station = station;
        try {
            e.timestamp = std::stod(line.substr(0, comma));
            e.channel = std::stoi(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("event CSV: malformed row on line " +
                                        std::to_string(line_no));
        }
        if (!std::isfinite(e.timestamp) || e.channel < 0) {
            throw std::invalid_argument("event CSV: invalid values on line " +
                                        std::to_string(line_no));
        }
        if (!events.empty() && e.timestamp < events.back().timestamp) {
            throw std::invalid_argument("event CSV: rows not sorted by timestamp (line " +
                                        std::to_string(line_no) + ")");
        }
        events.push_back(e);
    }
    return events;
}

// ---------------------------------------------------------------------------
// Spectrum CSV (per run, per channel: singles and coincidences)
// ---------------------------------------------------------------------------

inline std::string spectrum_to_csv(const CountTable& table) {
    std::string out = "pair,channel,N_A,N_B,N_AB\n";
    for (SettingPair p : all_setting_pairs()) {
        const ChannelCounts& run = table.run(p);
        for (int i = 0; i < table.channel_count; ++i) {
            out += to_string(p);
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += std::to_string(run.singles_a[i]);
            out += ',';
            out += std::to_string(run.singles_b[i]);
            out += ',';
            out += std::to_string(run.coincidences[i]);
            out += '\n';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    json model_json;  // kept verbatim for provenance in outputs
    HiddenVariableModel model;
    SettingsQuad quad;
    std::int64_t pair_count = 0;
    TimingConfig timing;
    std::uint64_t seed = 0;
    std::string output_dir;
};

inline ExperimentConfig config_from_json(const json& j) {
    const std::string context = "config";
    reject_unknown_keys(j, {"model", "quad", "N", "timing", "seed", "output_dir"}, context);
    ExperimentConfig config;
    config.model_json = expect_field(j, "model", context);
    config.model = model_from_json(config.model_json);
    config.quad = quad_from_json(expect_field(j, "quad", context), "config.quad");
    config.pair_count = expect_field(j, "N", context).get<std::int64_t>();
    require(config.pair_count >= 0, "config: N must be >= 0");

    const json& timing = expect_field(j, "timing", context);
    reject_unknown_keys(timing, {"T", "jitter", "window"}, "config.timing");
    config.timing.pair_period = expect_field(timing, "T", "config.timing").get<double>();
    config.timing.jitter = expect_field(timing, "jitter", "config.timing").get<double>();
    config.timing.window = expect_field(timing, "window", "config.timing").get<double>();
    config.timing.validate();

    config.seed = expect_field(j, "seed", context).get<std::uint64_t>();
    config.output_dir = expect_field(j, "output_dir", context).get<std::string>();
    require(!config.output_dir.empty(), "config: output_dir must not be empty");
    return config;
}

inline json run_meta_to_json(const RunRecord& run, const TimingConfig& timing) {
    return json{{"pair", to_string(run.pair)},
                {"N", run.pair_count},
                {"seed", run.seed},
                {"timing",
                 json{{"T", timing.pair_period},
                      {"jitter", timing.jitter},
                      {"window", timing.window}}}};
}

}  // namespace chspect::io
