// End-to-end CLI checks: exit codes, file outputs, determinism across
// thread counts. Spawns the real binary (path injected by CMake).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    const auto out_file = fs::temp_directory_path() / "gwel_cli_out.txt";
    const std::string cmd =
        env + " " + std::string(GWEL_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(status);
    std::ifstream in(out_file);
    result.output.assign((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    return result;
}

fs::path write_config(const char* name, const json& j) {
    const auto dir = fs::temp_directory_path() / "gwel_cli_cfg";
    fs::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << j.dump(2);
    return path;
}

json small_tree_config() {
    return json{
        {"mode", "tree"},
        {"offspring", {{"support", {1, 2}}, {"probs", {0.5, 0.5}}}},
        {"resistance", {{"family", "uniform"}, {"a", 0.5}, {"b", 1.5}}},
        {"seed", 20260810},
        {"depths", {3, 6}},
        {"trees", 350},
    };
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("constants: deterministic binary with uniform resistance") {
    const auto cfg = write_config("constants.json",
                                  json{{"mode", "tree"},
                                       {"offspring", {{"support", {2}}, {"probs", {1.0}}}},
                                       {"resistance",
                                        {{"family", "uniform"}, {"a", 0.5}, {"b", 1.5}}},
                                       {"seed", 1},
                                       {"depths", {2}},
                                       {"trees", 1}});
    const auto out_dir = fs::temp_directory_path() / "gwel_cli_constants";
    fs::remove_all(out_dir);
    const auto result =
        run_cli("constants --config " + cfg.string() + " --out " + out_dir.string());
    CHECK(result.exit_code == 0);

    json j;
    std::ifstream in(out_dir / "constants.json");
    REQUIRE(in.good());
    in >> j;
    CHECK(j["c1"].get<double>() == doctest::Approx(1.0));
    CHECK(j["c2"].get<double>() == doctest::Approx(1.0));
    CHECK(j["c3"].get<double>() == doctest::Approx(0.0));
    CHECK(j["c4"].get<double>() == doctest::Approx(-1.0 / 12.0));
    CHECK(j["dubuc"].get<bool>());
}

TEST_CASE("malformed pmf exits 2 with an InvalidPmf message") {
    const auto cfg = write_config(
        "bad_pmf.json", json{{"mode", "tree"},
                             {"offspring", {{"support", {1, 2}}, {"probs", {0.4, 0.4}}}},
                             {"resistance", {{"family", "point_mass"}, {"value", 1.0}}},
                             {"seed", 1},
                             {"depths", {2}},
                             {"trees", 1}});
    const auto result = run_cli("simulate-tree --config " + cfg.string());
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("InvalidPmf") != std::string::npos);
}

TEST_CASE("budget errors exit 3") {
    json cfg_json = {
        {"mode", "pool"},
        {"offspring", {{"support", {2}}, {"probs", {1.0}}}},
        {"resistance", {{"family", "point_mass"}, {"value", 1.0}}},
        {"seed", 1},
        {"pool",
         {{"N", 100000}, {"replicates", 4}, {"n_max", 500}, {"budget", 1000.0}}},
    };
    const auto cfg = write_config("budget.json", cfg_json);
    const auto result = run_cli("pool --config " + cfg.string());
    CHECK(result.exit_code == 3);
    CHECK(result.output.find("BudgetExceeded") != std::string::npos);
}

TEST_CASE("unknown flags are rejected with exit 2") {
    const auto result = run_cli("simulate-tree --frobnicate yes");
    CHECK(result.exit_code == 2);
}

TEST_CASE("conflicting overrides are rejected") {
    const auto cfg = write_config("dupe.json", small_tree_config());
    const auto result = run_cli("simulate-tree --config " + cfg.string() +
                                " --seed 1 --seed 2");
    CHECK(result.exit_code == 2);
}

TEST_CASE("simulate-tree then report round trip") {
    const auto cfg = write_config("roundtrip.json", small_tree_config());
    const auto out_dir = fs::temp_directory_path() / "gwel_cli_rt";
    fs::remove_all(out_dir);

    const auto sim =
        run_cli("simulate-tree --config " + cfg.string() + " --out " + out_dir.string());
    REQUIRE(sim.exit_code == 0);

    // locate the run dir (single subdirectory)
    fs::path run_dir;
    for (const auto& entry : fs::directory_iterator(out_dir)) run_dir = entry.path();
    REQUIRE(fs::exists(run_dir / "record.json"));

    const auto report_dir = fs::temp_directory_path() / "gwel_cli_report";
    fs::remove_all(report_dir);
    const auto rep = run_cli("report --run " + run_dir.string() + " --out " +
                             report_dir.string());
    CHECK(rep.exit_code == 0);
    CHECK(fs::exists(report_dir / "report.md"));
    CHECK(fs::exists(report_dir / "report.csv"));
    const std::string md = slurp(report_dir / "report.md");
    CHECK(md.find("tree") != std::string::npos);

    const auto missing = run_cli("report --run /nonexistent/run --out " +
                                 report_dir.string());
    CHECK(missing.exit_code == 2);
    CHECK(missing.output.find("MissingRun") != std::string::npos);
}

TEST_CASE("result files are byte-identical for 1, 4, 16 threads") {
    const auto cfg = write_config("threads.json", small_tree_config());
    std::string contents[3];
    int idx = 0;
    for (const char* threads : {"1", "4", "16"}) {
        const auto out_dir =
            fs::temp_directory_path() / (std::string("gwel_cli_t") + threads);
        fs::remove_all(out_dir);
        const auto result = run_cli(
            "simulate-tree --config " + cfg.string() + " --out " + out_dir.string(),
            std::string("GW_ELECTRIC_THREADS=") + threads);
        REQUIRE(result.exit_code == 0);
        fs::path run_dir;
        for (const auto& entry : fs::directory_iterator(out_dir)) run_dir = entry.path();
        contents[idx++] = slurp(run_dir / "record.json") + slurp(run_dir / "results.csv");
    }
    CHECK(contents[0] == contents[1]);
    CHECK(contents[0] == contents[2]);
}

TEST_CASE("seed override changes the run id") {
    const auto cfg = write_config("seed_override.json", small_tree_config());
    const auto out_dir = fs::temp_directory_path() / "gwel_cli_seed";
    fs::remove_all(out_dir);
    const auto a = run_cli("simulate-tree --config " + cfg.string() + " --out " +
                           out_dir.string());
    const auto b = run_cli("simulate-tree --config " + cfg.string() + " --seed 777 --out " +
                           out_dir.string());
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    int run_dirs = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(out_dir)) ++run_dirs;
    CHECK(run_dirs == 2);
}

TEST_CASE("report overlays two pool runs with a per-seed legend") {
    json pool_cfg = {
        {"mode", "pool"},
        {"offspring", {{"support", {2}}, {"probs", {1.0}}}},
        {"resistance", {{"family", "uniform"}, {"a", 0.5}, {"b", 1.5}}},
        {"seed", 1001},
        {"pool", {{"N", 20000}, {"replicates", 4}, {"n_max", 40}}},
        {"c0_cutoff", 20},
        {"fit_range", {10, 40}},
    };
    const auto out_dir = fs::temp_directory_path() / "gwel_cli_two_runs";
    fs::remove_all(out_dir);
    const auto cfg1 = write_config("pool_seed1.json", pool_cfg);
    pool_cfg["seed"] = 2002;
    const auto cfg2 = write_config("pool_seed2.json", pool_cfg);

    REQUIRE(run_cli("pool --config " + cfg1.string() + " --out " + out_dir.string())
                .exit_code == 0);
    REQUIRE(run_cli("fit-expansion --config " + cfg2.string() + " --out " +
                    out_dir.string())
                .exit_code == 0);

    std::string run_args;
    for (const auto& entry : fs::directory_iterator(out_dir))
        run_args += " --run " + entry.path().string();

    const auto report_dir = fs::temp_directory_path() / "gwel_cli_two_runs_report";
    fs::remove_all(report_dir);
    const auto rep = run_cli("report" + run_args + " --out " + report_dir.string());
    REQUIRE(rep.exit_code == 0);

    const std::string svg = slurp(report_dir / "n_x_vs_n.svg");
    CHECK(svg.find("seed 1001") != std::string::npos);
    CHECK(svg.find("seed 2002") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(fs::exists(report_dir / "log_correction.svg"));

    const std::string md = slurp(report_dir / "report.md");
    CHECK(md.find("c0 estimate") != std::string::npos);
}

TEST_CASE("oracle-check on an explicit network file") {
    const auto dir = fs::temp_directory_path() / "gwel_cli_net";
    fs::create_directories(dir);
    const auto net_path = dir / "net.txt";
    std::ofstream(net_path) << "0 1 1.0\n1 2 2.0\n";
    const auto result = run_cli("oracle-check --network " + net_path.string() +
                                " --source 0 --sink 2");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("R(source <-> sinks) = 3") != std::string::npos);
}

} // TEST_SUITE
