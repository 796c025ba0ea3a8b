#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmv/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               fs::path("mmv_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_json(const TempDir& dir, const std::string& name, const json& j) {
    const std::string p = dir.file(name);
    std::ofstream os(p);
    os << j.dump(2);
    return p;
}

json desk_config() {
    return json{
        {"market",
         {{"r", 0.03}, {"mu", {0.08}}, {"sigma", {{0.2}}}, {"horizon_T", 1.0}}},
        {"preference", {{"theta", 1.0}, {"x0", 1.0}}},
        {"constraint", {{"kind", "orthant"}}},
        {"simulation",
         {{"n_paths", 256}, {"n_steps", 32}, {"seed", 11}, {"scheme", "euler"},
          {"antithetic", false}, {"threads", 1}}},
        {"verification",
         {{"n_state_samples", 60}, {"n_control_samples", 20}, {"eta_radius", 0.0},
          {"tolerance", 1e-9}, {"seed", 13}}}};
}

json box_config() {
    json j = desk_config();
    j["market"] = {{"r", 0.0}, {"mu", {2.0}}, {"sigma", {{1.0}}}, {"horizon_T", 1.0}};
    j["constraint"] = {{"kind", "box"}, {"lower", {0.0}}, {"upper", {1.0}}};
    return j;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json slurp_json(const std::string& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("solve writes the closed form and respects the exit contract") {
    TempDir dir;
    const std::string cfg = write_json(dir, "desk.json", desk_config());
    const std::string out = dir.file("solution.json");
    CHECK(mmv::cli_main({"solve", "--config", cfg, "--out", out}) == 0);
    const json sol = slurp_json(out);
    CHECK(sol["xi_c"][0].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol["direction"][0].get<double>() == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("mu = r solve reports an all-zero direction") {
    TempDir dir;
    json cfg = desk_config();
    cfg["market"]["mu"] = {0.03};
    const std::string path = write_json(dir, "flat.json", cfg);
    const std::string out = dir.file("flat_out.json");
    CHECK(mmv::cli_main({"solve", "--config", path, "--out", out}) == 0);
    const json sol = slurp_json(out);
    CHECK(sol["direction"][0].get<double>() == 0.0);
}

TEST_CASE("box constraint solves exit with the domain error code") {
    TempDir dir;
    const std::string cfg = write_json(dir, "box.json", box_config());
    CHECK(mmv::cli_main({"solve", "--config", cfg}) == 3);
}

TEST_CASE("config and usage failures exit 2") {
    TempDir dir;
    CHECK(mmv::cli_main({"solve", "--config", dir.file("missing.json")}) == 2);

    json broken = desk_config();
    broken["market"]["oops"] = 1;
    const std::string cfg = write_json(dir, "broken.json", broken);
    CHECK(mmv::cli_main({"solve", "--config", cfg}) == 2);

    CHECK(mmv::cli_main({"solve", "--config", cfg, "--format", "yaml"}) == 2);
    CHECK(mmv::cli_main({"frobnicate"}) == 2);

    const std::string good = write_json(dir, "good.json", desk_config());
    CHECK(mmv::cli_main({"evaluate", "--config", good, "--strategy", "bogus"}) == 2);
}

TEST_CASE("verify exits 1 on the box counterexample orthogonality suite") {
    TempDir dir;
    const std::string cfg = write_json(dir, "box.json", box_config());
    const std::string out = dir.file("report.json");
    CHECK(mmv::cli_main({"verify", "--config", cfg, "--suite", "orthogonality", "--out",
                         out}) == 1);
    const json reports = slurp_json(out);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0]["pass"].get<bool>() == false);
    CHECK(reports[0]["worst_residual"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("verify runs every suite green on the desk instance") {
    TempDir dir;
    json cfg = desk_config();
    cfg["simulation"]["n_paths"] = 2000;
    cfg["simulation"]["n_steps"] = 64;
    cfg["simulation"]["threads"] = 0;
    const std::string path = write_json(dir, "desk.json", cfg);
    CHECK(mmv::cli_main({"verify", "--config", path, "--suite", "all"}) == 0);
}

TEST_CASE("simulate is deterministic and strategy-equivalent byte for byte") {
    TempDir dir;
    const std::string cfg = write_json(dir, "desk.json", desk_config());

    const std::string a = dir.file("run_a");
    const std::string b = dir.file("run_b");
    CHECK(mmv::cli_main({"simulate", "--config", cfg, "--seed", "42", "--strategy", "mmv",
                         "--out", a}) == 0);
    CHECK(mmv::cli_main({"simulate", "--config", cfg, "--seed", "42", "--strategy", "mmv",
                         "--out", b}) == 0);
    CHECK(slurp(a + "_paths.csv") == slurp(b + "_paths.csv"));
    CHECK(slurp(a + "_summary.json") == slurp(b + "_summary.json"));

    const std::string mv = dir.file("run_mv");
    CHECK(mmv::cli_main({"simulate", "--config", cfg, "--seed", "42", "--strategy", "mv",
                         "--out", mv}) == 0);
    CHECK(slurp(a + "_paths.csv") == slurp(mv + "_paths.csv"));

    const std::string threaded = dir.file("run_threads");
    CHECK(mmv::cli_main({"simulate", "--config", cfg, "--seed", "42", "--strategy", "mmv",
                         "--threads", "4", "--out", threaded}) == 0);
    CHECK(slurp(a + "_paths.csv") == slurp(threaded + "_paths.csv"));
}

TEST_CASE("zero strategy leaves no terminal variance") {
    TempDir dir;
    const std::string cfg = write_json(dir, "desk.json", desk_config());
    const std::string out = dir.file("zero");
    CHECK(mmv::cli_main({"simulate", "--config", cfg, "--strategy", "zero", "--out", out}) ==
          0);
    const json summary = slurp_json(out + "_summary.json");
    // identical paths; only the mean's last-ulp rounding shows up in the variance
    CHECK(summary["terminal_wealth"]["variance"].get<double>() <= 1e-24);
    CHECK(summary["terminal_wealth"]["max"].get<double>() ==
          summary["terminal_wealth"]["min"].get<double>());
    CHECK(summary["strategy"].get<std::string>() == "zero");
}

TEST_CASE("evaluate reports calibrated z-scores") {
    TempDir dir;
    const std::string cfg = write_json(dir, "desk.json", desk_config());

    const std::string out = dir.file("eval.json");
    CHECK(mmv::cli_main({"evaluate", "--config", cfg, "--strategy", "mmv", "--paths",
                         "20000", "--steps", "64", "--threads", "0", "--out", out}) == 0);
    const json eval = slurp_json(out);
    CHECK(eval["n_paths"].get<std::int64_t>() == 20000);
    CHECK(eval["target"].get<double>() == doctest::Approx(1.0627017634124467).epsilon(1e-12));
    CHECK(std::abs(eval["mv"]["z"].get<double>()) <= 3.0);
    CHECK(std::abs(eval["mmv"]["z"].get<double>()) <= 3.0);

    const std::string bad = dir.file("eval_scaled.json");
    CHECK(mmv::cli_main({"evaluate", "--config", cfg, "--strategy", "scaled:2.0", "--paths",
                         "20000", "--steps", "64", "--threads", "0", "--out", bad}) == 0);
    const json scaled = slurp_json(bad);
    CHECK(scaled["mv"]["z"].get<double>() <= -3.0);
}

TEST_CASE("project reports the constrained price of risk by default") {
    TempDir dir;
    json cfg = desk_config();
    cfg["market"]["mu"] = {0.01};  // xi = -0.1 < 0
    const std::string path = write_json(dir, "short.json", cfg);
    const std::string out = dir.file("proj.json");
    CHECK(mmv::cli_main({"project", "--config", path, "--out", out}) == 0);
    const json proj = slurp_json(out);
    CHECK(proj["input"][0].get<double>() == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(proj["projection"][0].get<double>() == 0.0);

    CHECK(mmv::cli_main({"project", "--config", path, "--vector", "[0.4]", "--out", out}) ==
          0);
    const json proj2 = slurp_json(out);
    CHECK(proj2["projection"][0].get<double>() == doctest::Approx(0.4).epsilon(1e-12));

    CHECK(mmv::cli_main({"project", "--config", path, "--vector", "oops"}) == 2);
}

TEST_CASE("help is not an error") {
    CHECK(mmv::cli_main({"--help"}) == 0);
}
