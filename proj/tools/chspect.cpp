// chspect: simulate and analyze Bell/CH coincidence experiments with a
// per-channel hidden-variable spectrograph at each station.
//
// Exit codes: 0 success / all verdicts hold, 1 a verdict failed,
// 2 usage or configuration error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chspect/analyze.hpp"
#include "chspect/coincidence.hpp"
#include "chspect/io.hpp"
#include "chspect/qm_oracle.hpp"
#include "chspect/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chspect;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerdictFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

SettingsQuad parse_quad_csv(const std::string& text) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string token =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            values.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw std::invalid_argument("--quad: cannot parse \"" + token + "\" as a number");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (values.size() != 4) {
        throw std::invalid_argument("--quad expects four comma-separated radians: a,ap,b,bp");
    }
    SettingsQuad quad{values[0], values[1], values[2], values[3]};
    quad.validate();
    return quad;
}

EberhardtState state_from_r2(double r2) {
    require(std::isfinite(r2) && r2 >= 0.0, "--r2 must be finite and >= 0");
    return EberhardtState{std::sqrt(r2)};
}

int cmd_qm_eval(double r2, const std::string& quad_csv) {
    const QmJReport report = j_value(state_from_r2(r2), parse_quad_csv(quad_csv));
    emit(io::qm_report_to_json(report));
    return kExitOk;
}

int cmd_qm_scan(double r2, int grid) {
    const QmJReport report = find_violation(state_from_r2(r2), grid);
    emit(io::qm_report_to_json(report));
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                 std::optional<std::string> out_override) {
    json parsed;
    try {
        parsed = json::parse(io::read_file(config_path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    io::ExperimentConfig config = io::config_from_json(parsed);
    if (seed_override) config.seed = *seed_override;
    if (out_override) config.output_dir = *out_override;

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);

    CountTable table;
    table.channel_count = config.model.config.channel_count;
    table.pairs_per_run = config.pair_count;
    for (SettingPair pair : all_setting_pairs()) {
        const int run_index = static_cast<int>(pair);
        const RunRecord run = run_experiment(config.model, pair, config.quad, config.pair_count,
                                             config.timing, config.seed, run_index);
        const fs::path run_dir = out_dir / (std::string("run_") + to_string(pair));
        fs::create_directories(run_dir);
        io::write_file_atomic(run_dir / "events_A.csv", io::events_to_csv(run.stream_a));
        io::write_file_atomic(run_dir / "events_B.csv", io::events_to_csv(run.stream_b));
        io::write_file_atomic(run_dir / "meta.json",
                              io::run_meta_to_json(run, config.timing).dump(2) + "\n");
        table.run(pair) = aggregate(run, config.timing.window, table.channel_count);
    }

    io::write_file_atomic(out_dir / "counts.json",
                          io::count_table_to_json(table).dump(2) + "\n");
    io::write_file_atomic(out_dir / "spectrum.csv", io::spectrum_to_csv(table));
    return kExitOk;
}

CountTable load_count_table(const std::string& path) {
    json parsed;
    try {
        parsed = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("count table: ") + e.what());
    }
    return io::count_table_from_json(parsed);
}

int cmd_analyze(const std::string& counts_path) {
    const CountTable table = load_count_table(counts_path);
    const AuditReport audit = audit_features(table);
    json out;
    if (audit.pass) {
        const JReport report = spectrograph_inequality(table);
        out = io::j_report_to_json(report);
        out["audit"] = io::audit_report_to_json(audit);
        emit(out);
        const bool all_hold = report.verdicts.audit_pass && report.verdicts.ch_holds &&
                              report.verdicts.spectrograph_holds;
        return all_hold ? kExitOk : kExitVerdictFailed;
    }
    out["verdicts"] = json{{"audit_pass", false}, {"ch_holds", false},
                           {"spectrograph_holds", false}};
    out["audit"] = io::audit_report_to_json(audit);
    emit(out);
    return kExitVerdictFailed;
}

int cmd_audit(const std::string& counts_path) {
    const AuditReport audit = audit_features(load_count_table(counts_path));
    emit(io::audit_report_to_json(audit));
    return audit.pass ? kExitOk : kExitVerdictFailed;
}

int cmd_match(const std::string& a_path, const std::string& b_path, double window,
              int channel_count, const std::string& pair_label) {
    const auto stream_a = io::events_from_csv(io::read_file(a_path), Station::A);
    const auto stream_b = io::events_from_csv(io::read_file(b_path), Station::B);

    RunRecord run;
    run.pair = setting_pair_from_string(pair_label);
    run.stream_a = stream_a;
    run.stream_b = stream_b;
    const ChannelCounts counts = aggregate(run, window, channel_count);
    const MatchResult result = match_events(stream_a, stream_b, window);
    emit(io::match_summary_to_json(counts, result, window, channel_count));
    return kExitOk;
}

/// --singles accepts "uniform:K=<channels>,s=<count>" (the same spectrum in
/// every run and station) or a path to a JSON file in the count-table layout
/// restricted to singles arrays.
SinglesSpec parse_singles_spec(const std::string& text) {
    SinglesSpec spec;
    if (text.rfind("uniform:", 0) == 0) {
        int k = 0;
        long long s = -1;
        const std::string body = text.substr(8);
        if (std::sscanf(body.c_str(), "K=%d,s=%lld", &k, &s) != 2 || k < 1 || s < 0) {
            throw std::invalid_argument("--singles uniform spec must be uniform:K=<k>,s=<s>");
        }
        spec.channel_count = k;
        for (int r = 0; r < kNumSettingPairs; ++r) {
            spec.singles_a[r].assign(k, s);
            spec.singles_b[r].assign(k, s);
        }
        return spec;
    }
    json parsed;
    try {
        parsed = json::parse(io::read_file(text));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("singles file: ") + e.what());
    }
    io::reject_unknown_keys(parsed, {"K", "AB", "ABp", "ApB", "ApBp"}, "singles file");
    spec.channel_count = io::expect_field(parsed, "K", "singles file").get<int>();
    for (SettingPair p : all_setting_pairs()) {
        const json& r = io::expect_field(parsed, to_string(p), "singles file");
        io::reject_unknown_keys(r, {"singles_A", "singles_B"}, "singles file run");
        spec.singles_a[static_cast<int>(p)] =
            io::expect_field(r, "singles_A", "singles file").get<std::vector<std::int64_t>>();
        spec.singles_b[static_cast<int>(p)] =
            io::expect_field(r, "singles_B", "singles file").get<std::vector<std::int64_t>>();
    }
    return spec;
}

int cmd_maximize(const std::string& singles_text, std::int64_t pairs_per_run) {
    const MaxJResult result = max_j_under_realism(parse_singles_spec(singles_text), pairs_per_run);
    json out;
    out["J_max"] = result.j_max;
    out["table"] = io::count_table_to_json(result.table);
    emit(out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bell/CH coincidence experiments with per-channel hidden-variable spectrographs"};
    app.require_subcommand(1);

    // qm eval | qm scan
    auto* qm = app.add_subcommand("qm", "Closed-form CH predictions for the Eberhardt state");
    qm->require_subcommand(1);
    double r2 = 0.0;
    std::string quad_csv;
    int grid = 24;
    auto* qm_eval = qm->add_subcommand("eval", "Evaluate J at one settings quad");
    qm_eval->add_option("--r2", r2, "Amplitude ratio squared, r^2")->required();
    qm_eval->add_option("--quad", quad_csv, "Angles a,ap,b,bp in radians")->required();
    auto* qm_scan = qm->add_subcommand("scan", "Search settings for the largest J");
    qm_scan->add_option("--r2", r2, "Amplitude ratio squared, r^2")->required();
    qm_scan->add_option("--grid", grid, "Grid points per angle (>= 8)");

    // simulate
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    auto* simulate = app.add_subcommand("simulate", "Run the four-setting experiment from a config");
    simulate->add_option("config", config_path, "Experiment config JSON")->required();
    simulate->add_option("--seed", seed_override, "Override the config seed");
    simulate->add_option("--out", out_override, "Override the config output directory");

    // match
    std::string a_path, b_path, pair_label = "AB";
    double window = 0.0;
    int channels = 0;
    auto* match = app.add_subcommand("match", "Match two event-stream CSVs into coincidences");
    match->add_option("--a", a_path, "Station A event CSV")->required();
    match->add_option("--b", b_path, "Station B event CSV")->required();
    match->add_option("--window", window, "Coincidence window, seconds")->required();
    match->add_option("--channels", channels, "Channel count K")->required();
    match->add_option("--pair", pair_label, "Setting pair label (AB, ABp, ApB, ApBp)");

    // analyze / audit
    std::string counts_path;
    auto* analyze = app.add_subcommand("analyze", "CH statistic, channel partition and verdicts");
    analyze->add_option("counts", counts_path, "Count table JSON")->required();
    auto* audit = app.add_subcommand("audit", "Check features #1-#3 on a count table");
    audit->add_option("counts", counts_path, "Count table JSON")->required();

    // maximize
    std::string singles_text;
    std::int64_t pairs_per_run = 0;
    auto* maximize = app.add_subcommand("maximize", "Largest J compatible with the given singles");
    maximize->add_option("--singles", singles_text, "uniform:K=<k>,s=<s> or a JSON file")
        ->required();
    maximize->add_option("--n", pairs_per_run, "Emitted pairs per run N")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (qm_eval->parsed()) return cmd_qm_eval(r2, quad_csv);
        if (qm_scan->parsed()) return cmd_qm_scan(r2, grid);
        if (simulate->parsed()) return cmd_simulate(config_path, seed_override, out_override);
        if (match->parsed()) return cmd_match(a_path, b_path, window, channels, pair_label);
        if (analyze->parsed()) return cmd_analyze(counts_path);
        if (audit->parsed()) return cmd_audit(counts_path);
        if (maximize->parsed()) return cmd_maximize(singles_text, pairs_per_run);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const io::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
