#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "chspect/io.hpp"
#include "chspect/simulate.hpp"
#include "test_support.hpp"

using namespace chspect;
using testsupport::run_command;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CHSPECT_CLI_PATH;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("chspect_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json make_config(const json& model, std::int64_t n, std::uint64_t seed,
                 const std::string& out_dir) {
    json config;
    config["model"] = model;
    config["quad"] = io::quad_to_json({0.4, 1.3, 0.0, -0.6});
    config["N"] = n;
    config["timing"] = json{{"T", 1e-6}, {"jitter", 1e-8}, {"window", 2.5e-7}};
    config["seed"] = seed;
    config["output_dir"] = out_dir;
    return config;
}

}  // namespace

TEST_CASE("qm eval on the all-zero quad") {
    const auto res = run_command(kCli + " qm eval --r2 0 --quad 0,0,0,0");
    REQUIRE(res.exit_code == 0);
    const json report = json::parse(res.output);
    CHECK(report["J"].get<double>() == Catch::Approx(-1.0).margin(1e-12));
    CHECK(report["r2"].get<double>() == 0.0);
}

TEST_CASE("qm eval rejects malformed arguments") {
    CHECK(run_command(kCli + " qm eval --r2 0.1 --quad 1,2,3 2>/dev/null").exit_code == 2);
    CHECK(run_command(kCli + " qm eval --r2 0.1 --quad a,b,c,d 2>/dev/null").exit_code == 2);
    CHECK(run_command(kCli + " qm eval --quad 0,0,0,0 2>/dev/null").exit_code == 2);
    CHECK(run_command(kCli + " qm eval --r2 -1 --quad 0,0,0,0 2>/dev/null").exit_code == 2);
    CHECK(run_command(kCli + " nonsense 2>/dev/null").exit_code == 2);
}

TEST_CASE("qm scan finds the violation region") {
    const auto res = run_command(kCli + " qm scan --r2 0.1 --grid 12");
    REQUIRE(res.exit_code == 0);
    const json report = json::parse(res.output);
    CHECK(report["J"].get<double>() >= 0.04);
}

TEST_CASE("audit flags a bad table via exit code 1") {
    const fs::path dir = fresh_dir("audit");
    std::mt19937_64 rng(71);
    CountTable table = testsupport::random_realism_table(rng, 2, 100);
    table.run(SettingPair::AB).coincidences[0] =
        table.run(SettingPair::AB).singles_a[0] + table.run(SettingPair::AB).singles_b[0] + 5;
    io::write_file_atomic(dir / "bad.json", io::count_table_to_json(table).dump(2) + "\n");

    const auto res = run_command(kCli + " audit " + (dir / "bad.json").string());
    CHECK(res.exit_code == 1);
    const json report = json::parse(res.output);
    CHECK_FALSE(report["pass"].get<bool>());
    CHECK(report["violations"].size() >= 1);

    fs::remove_all(dir);
}

TEST_CASE("analyze on a realism table reports verdicts and exits 0") {
    const fs::path dir = fresh_dir("analyze");
    std::mt19937_64 rng(72);
    const CountTable table = testsupport::random_realism_table(rng, 3, 500);
    io::write_file_atomic(dir / "counts.json", io::count_table_to_json(table).dump(2) + "\n");

    const auto res = run_command(kCli + " analyze " + (dir / "counts.json").string());
    const json report = json::parse(res.output);
    CHECK(report["verdicts"]["audit_pass"].get<bool>());
    CHECK(report["verdicts"]["spectrograph_holds"].get<bool>());
    const bool ch = report["verdicts"]["ch_holds"].get<bool>();
    CHECK(res.exit_code == (ch ? 0 : 1));

    CHECK(run_command(kCli + " analyze " + (dir / "missing.json").string() + " 2>/dev/null")
              .exit_code == 3);
    fs::remove_all(dir);
}

TEST_CASE("maximize with uniform singles") {
    const auto res = run_command(kCli + " maximize --singles uniform:K=4,s=25 --n 100");
    REQUIRE(res.exit_code == 0);
    const json report = json::parse(res.output);
    CHECK(report["J_max"].get<double>() == Catch::Approx(1.0));
    CHECK(report["table"]["ABp"]["coincidences"] == json::array({0, 0, 0, 0}));
    CHECK(run_command(kCli + " maximize --singles uniform:K=x --n 9 2>/dev/null").exit_code == 2);
}

TEST_CASE("maximize with a singles file") {
    const fs::path dir = fresh_dir("maximize");
    json singles;
    singles["K"] = 1;
    for (const char* label : {"AB", "ABp", "ApB", "ApBp"}) {
        singles[label] = json{{"singles_A", json::array({3})}, {"singles_B", json::array({2})}};
    }
    io::write_file_atomic(dir / "singles.json", singles.dump(2) + "\n");
    const auto res = run_command(kCli + " maximize --singles " + (dir / "singles.json").string() +
                                 " --n 10");
    REQUIRE(res.exit_code == 0);
    // Per run min(3,2)=2 on the plus-signed runs, zero on the minus-signed
    // one: (2 + 2 + 2 - 0 - 2 - 3)/10.
    CHECK(json::parse(res.output)["J_max"].get<double>() == Catch::Approx(0.1));
    fs::remove_all(dir);
}

TEST_CASE("match subcommand on small CSV inputs") {
    const fs::path dir = fresh_dir("match");
    io::write_file_atomic(dir / "a.csv", "timestamp,channel\n1.0,2\n2.0,1\n");
    io::write_file_atomic(dir / "b.csv", "timestamp,channel\n1.05,2\n2.0,0\n");
    const auto res = run_command(kCli + " match --a " + (dir / "a.csv").string() + " --b " +
                                 (dir / "b.csv").string() + " --window 0.2 --channels 3");
    REQUIRE(res.exit_code == 0);
    const json report = json::parse(res.output);
    CHECK(report["coincidences"] == json::array({0, 0, 1}));
    CHECK(report["noise"].get<int>() == 1);
    CHECK(report["matches"].get<int>() == 1);
    fs::remove_all(dir);
}

TEST_CASE("simulate writes the promised artifacts deterministically") {
    const fs::path dir = fresh_dir("simulate");
    std::mt19937_64 rng(73);
    const auto model = testsupport::random_factorizable_model(rng, 3);
    const json model_json = io::model_to_json(model, "factorizable");

    const json config = make_config(model_json, 2000, 11, (dir / "out1").string());
    io::write_file_atomic(dir / "config.json", config.dump(2) + "\n");
    REQUIRE(run_command(kCli + " simulate " + (dir / "config.json").string()).exit_code == 0);

    for (const char* label : {"AB", "ABp", "ApB", "ApBp"}) {
        const fs::path run_dir = dir / "out1" / (std::string("run_") + label);
        CHECK(fs::exists(run_dir / "events_A.csv"));
        CHECK(fs::exists(run_dir / "events_B.csv"));
        const json meta = json::parse(io::read_file(run_dir / "meta.json"));
        CHECK(meta["pair"] == label);
        CHECK(meta["N"].get<int>() == 2000);
        CHECK(meta["seed"].get<int>() == 11);
    }
    CHECK(fs::exists(dir / "out1" / "spectrum.csv"));

    // Same config into a second directory: identical bytes.
    const auto rerun = run_command(kCli + " simulate " + (dir / "config.json").string() +
                                   " --out " + (dir / "out2").string());
    REQUIRE(rerun.exit_code == 0);
    CHECK(io::read_file(dir / "out1" / "counts.json") ==
          io::read_file(dir / "out2" / "counts.json"));
    CHECK(io::read_file(dir / "out1" / "spectrum.csv") ==
          io::read_file(dir / "out2" / "spectrum.csv"));
    CHECK(io::read_file(dir / "out1" / "run_ApB" / "events_A.csv") ==
          io::read_file(dir / "out2" / "run_ApB" / "events_A.csv"));

    // The on-disk table matches the library pipeline.
    const CountTable table =
        io::count_table_from_json(json::parse(io::read_file(dir / "out1" / "counts.json")));
    const io::ExperimentConfig parsed = io::config_from_json(config);
    const CountTable direct = run_full(parsed.model, parsed.quad, parsed.pair_count,
                                       parsed.timing, parsed.seed);
    CHECK(table == direct);

    // A config with N=0 still writes a complete, zero-filled table.
    const json zero_config = make_config(model_json, 0, 11, (dir / "out0").string());
    io::write_file_atomic(dir / "config0.json", zero_config.dump(2) + "\n");
    REQUIRE(run_command(kCli + " simulate " + (dir / "config0.json").string()).exit_code == 0);
    const CountTable zeros =
        io::count_table_from_json(json::parse(io::read_file(dir / "out0" / "counts.json")));
    for (SettingPair p : all_setting_pairs()) {
        CHECK(zeros.run(p).sum_singles_a() == 0);
        CHECK(zeros.run(p).sum_coincidences() == 0);
    }

    // A different seed via the override changes the data; the same seed
    // reproduces it.
    const auto reseeded = run_command(kCli + " simulate " + (dir / "config.json").string() +
                                      " --seed 12 --out " + (dir / "out3").string());
    REQUIRE(reseeded.exit_code == 0);
    CHECK(io::read_file(dir / "out1" / "counts.json") !=
          io::read_file(dir / "out3" / "counts.json"));
    const auto same_seed = run_command(kCli + " simulate " + (dir / "config.json").string() +
                                       " --seed 11 --out " + (dir / "out4").string());
    REQUIRE(same_seed.exit_code == 0);
    CHECK(io::read_file(dir / "out1" / "counts.json") ==
          io::read_file(dir / "out4" / "counts.json"));

    // Config problems are usage errors, missing files are I/O errors.
    json broken = config;
    broken["mystery"] = 1;
    io::write_file_atomic(dir / "broken.json", broken.dump(2) + "\n");
    CHECK(run_command(kCli + " simulate " + (dir / "broken.json").string() + " 2>/dev/null")
              .exit_code == 2);
    CHECK(run_command(kCli + " simulate " + (dir / "nope.json").string() + " 2>/dev/null")
              .exit_code == 3);
    fs::remove_all(dir);
}
