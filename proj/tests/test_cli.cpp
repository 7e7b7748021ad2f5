#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() { return CARBONTRACE_CLI; }

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args, const fs::path& workdir) {
    fs::path log = workdir / "stdout.txt";
    std::string cmd = "cd '" + workdir.string() + "' && '" + cli_path() + "' " + args + " > '" +
                      log.string() + "' 2>&1";
    int status = std::system(cmd.c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("carbontrace_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string six_case() { return carbontrace::testing::cases_dir() + "/six_bus.json"; }

}  // namespace

TEST_CASE("run: emits the report and the per-bus table") {
    fs::path dir = fresh_dir("run");
    CommandResult r =
        run_cli("run --case " + six_case() + " --load-factor 1.0 --format csv --format json", dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("system emission:") != std::string::npos);

    std::string csv = slurp(dir / "report.csv");
    CHECK(csv.rfind("bus,demand_mw,total_emission,avg_rate,marginal_rate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + six buses

    nlohmann::json doc = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(doc["rows"].size() == 6);
    CHECK(doc["load_factor"] == 1.0);
}

TEST_CASE("run: identical invocations produce byte-identical files") {
    fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    REQUIRE(run_cli("run --case " + six_case() + " --load-factor 0.8", a).exit_code == 0);
    REQUIRE(run_cli("run --case " + six_case() + " --load-factor 0.8", b).exit_code == 0);
    CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
    CHECK(!slurp(a / "report.csv").empty());
}

TEST_CASE("run: external dispatch round-trips through the files") {
    fs::path dir = fresh_dir("ext");
    REQUIRE(run_cli("run --case " + six_case() + " --load-factor 0.6 --dispatch-out dispatch.json",
                    dir)
                .exit_code == 0);
    CommandResult r = run_cli(
        "run --case " + six_case() + " --load-factor 0.6 --dispatch-in dispatch.json --format json",
        dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    nlohmann::json doc = nlohmann::json::parse(slurp(dir / "report.json"));
    for (const auto& row : doc["rows"]) CHECK(row["marginal_note"] == "not_computed");
}

TEST_CASE("exit codes distinguish the error classes") {
    fs::path dir = fresh_dir("errors");

    SECTION("malformed case file -> 1") {
        std::ofstream(dir / "broken.json") << "{ not json";
        CHECK(run_cli("run --case broken.json", dir).exit_code == 1);
    }
    SECTION("validation failure -> 1") {
        std::ofstream(dir / "island.json") << R"({
          "buses":[{"id":1,"demand":10},{"id":2,"demand":0},{"id":3,"demand":0}],
          "lines":[{"from":1,"to":2,"susceptance":100,"limit":50}],
          "generators":[{"id":1,"bus":1,"cost":1,"p_min":0,"p_max":50,"emission_rate":100}],
          "reference_bus":1})";
        CommandResult r = run_cli("run --case island.json", dir);
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("disconnected graph") != std::string::npos);
    }
    SECTION("infeasible dispatch -> 2") {
        CHECK(run_cli("run --case " + six_case() + " --load-factor 40", dir).exit_code == 2);
    }
    SECTION("unknown flag -> nonzero") {
        CHECK(run_cli("run --case " + six_case() + " --no-such-flag", dir).exit_code != 0);
    }
}

TEST_CASE("sweep: one report per factor plus summary") {
    fs::path dir = fresh_dir("sweep");
    CommandResult r = run_cli("sweep --case " + six_case(), dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    for (const char* f : {"0.2", "0.4", "0.6", "0.8", "1"})
        CHECK(fs::exists(dir / ("report_" + std::string(f) + ".csv")));
    std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.rfind("factor,status,", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 6);
}

TEST_CASE("sweep: an infeasible factor is marked and exits 2") {
    fs::path dir = fresh_dir("sweep_inf");
    CommandResult r = run_cli("sweep --case " + six_case() + " --factors 0.2 40", dir);
    CHECK(r.exit_code == 2);
    CHECK(fs::exists(dir / "report_0.2.csv"));
    std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.find("40,infeasible") != std::string::npos);
}

TEST_CASE("trace: dumps the attribution matrix") {
    fs::path dir = fresh_dir("trace");
    CommandResult r = run_cli(
        "trace --case " + six_case() + " --load-factor 0.8 --emit-flowgraph --format csv --format json",
        dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp(dir / "contrib.csv");
    CHECK(csv.rfind("bus,generator,mw\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 * 3);
    CHECK(slurp(dir / "flowgraph.csv").rfind("tail,head,flow_mw\n", 0) == 0);
    nlohmann::json doc = nlohmann::json::parse(slurp(dir / "contrib.json"));
    CHECK(doc["node_contrib"].size() == 18);
    CHECK(doc["reachable_sets"].size() == 3);
}

TEST_CASE("run: the thirty-bus case finishes fast, marginals included") {
    fs::path dir = fresh_dir("t30");
    std::string case30 = carbontrace::testing::cases_dir() + "/thirty_bus.json";
    auto t0 = std::chrono::steady_clock::now();
    CommandResult r = run_cli("run --case " + case30, dir);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(seconds < 1.0);
    CHECK(run_cli("check --case " + case30, dir).exit_code == 0);
}

TEST_CASE("check: passes on the bundled cases and fails on corrupt dispatch") {
    fs::path dir = fresh_dir("check");
    CommandResult ok = run_cli("check --case " + six_case() + " --load-factor 0.8", dir);
    INFO(ok.output);
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("FAIL") == std::string::npos);
    CHECK(ok.output.find("demand recovery") != std::string::npos);

    REQUIRE(run_cli("run --case " + six_case() + " --load-factor 0.8 --dispatch-out d.json", dir)
                .exit_code == 0);
    nlohmann::json doc = nlohmann::json::parse(slurp(dir / "d.json"));
    doc["generation"][0] = double(doc["generation"][0]) + 7.0;
    std::ofstream(dir / "d.json") << doc.dump();
    CommandResult bad =
        run_cli("check --case " + six_case() + " --load-factor 0.8 --dispatch-in d.json", dir);
    CHECK(bad.exit_code == 3);
    CHECK(bad.output.find("FAIL") != std::string::npos);
}
