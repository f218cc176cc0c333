#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eca/cli.hpp"

using namespace eca;
using cli::RunConfig;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Tiny but complete configuration for pipeline tests.
RunConfig tiny_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.out_dir = out_dir;
    cfg.source_train_count = 300;
    cfg.source_test_count = 100;
    cfg.target_blend_count = 400;
    cfg.target_test_count = 100;
    cfg.hidden = {16, 16};
    cfg.pretrain_epochs = 10;
    cfg.adapt_epochs = 2;
    return cfg;
}

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv = {"eca"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("generate writes byte-identical files across runs") {
    const fs::path d1 = fresh_dir("eca_cli_gen1");
    const fs::path d2 = fresh_dir("eca_cli_gen2");
    CHECK(cli::cmd_generate(tiny_config(d1.string())) == 0);
    CHECK(cli::cmd_generate(tiny_config(d2.string())) == 0);
    for (const char* f : {"source_train.csv", "source_test.csv", "target_blend.csv",
                          "target_test.csv"}) {
        CHECK(slurp(d1 / "generate" / f) == slurp(d2 / "generate" / f));
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("full pipeline runs and is reproducible from the config echo") {
    const fs::path dir = fresh_dir("eca_cli_pipe");
    RunConfig cfg = tiny_config(dir.string());
    REQUIRE(cli::cmd_generate(cfg) == 0);
    REQUIRE(cli::cmd_pretrain(cfg) == 0);
    REQUIRE(cli::cmd_adapt(cfg) == 0);
    REQUIRE(cli::cmd_evaluate(cfg, "", "target-test") == 0);
    CHECK(fs::exists(dir / "pretrain" / "checkpoint.json"));
    CHECK(fs::exists(dir / "adapt" / "checkpoint.json"));
    CHECK(fs::exists(dir / "adapt" / "metrics.csv"));
    CHECK(fs::exists(dir / "evaluate" / "metrics.csv"));

    const std::string first_metrics = slurp(dir / "adapt" / "metrics.csv");
    // re-run adapt from the echoed config: identical stream
    RunConfig echoed = cli::parse_config_json(slurp(dir / "adapt" / "config_echo.json"));
    REQUIRE(cli::cmd_adapt(echoed) == 0);
    CHECK(slurp(dir / "adapt" / "metrics.csv") == first_metrics);
    fs::remove_all(dir);
}

TEST_CASE("ablate emits three metric files with a summary") {
    const fs::path dir = fresh_dir("eca_cli_abl");
    RunConfig cfg = tiny_config(dir.string());
    cfg.adapt_epochs = 1;
    REQUIRE(cli::cmd_generate(cfg) == 0);
    REQUIRE(cli::cmd_pretrain(cfg) == 0);
    REQUIRE(cli::cmd_ablate(cfg) == 0);
    CHECK(fs::exists(dir / "ablate" / "cel-only.csv"));
    CHECK(fs::exists(dir / "ablate" / "con-unweighted.csv"));
    CHECK(fs::exists(dir / "ablate" / "con-full.csv"));
    const std::string summary = slurp(dir / "ablate" / "summary.csv");
    CHECK(summary.find("mode,final_accuracy") == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 4);
    fs::remove_all(dir);
}

TEST_CASE("sweep-k writes one metrics file per value plus a summary") {
    const fs::path dir = fresh_dir("eca_cli_sweep");
    RunConfig cfg = tiny_config(dir.string());
    cfg.adapt_epochs = 1;
    REQUIRE(cli::cmd_generate(cfg) == 0);
    REQUIRE(cli::cmd_pretrain(cfg) == 0);
    REQUIRE(cli::cmd_sweep_k(cfg, {2, 3}) == 0);
    CHECK(fs::exists(dir / "sweep-k" / "k2.csv"));
    CHECK(fs::exists(dir / "sweep-k" / "k3.csv"));
    CHECK(slurp(dir / "sweep-k" / "summary.csv").find("k,final_accuracy") == 0);
    fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected") {
    CHECK_THROWS_AS(cli::parse_config_json(R"({"bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_config_json(R"({"data": {"bogus": 1}})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_config_json(R"({"adapt": {"momentumm": 0.9}})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_config_json("not json"), ParseError);
}

TEST_CASE("config echo round-trips to the same document") {
    RunConfig cfg = tiny_config("somewhere");
    cfg.seed = 99;
    cfg.beta = 0.5;
    const std::string echoed = cfg.to_json();
    RunConfig back = cli::parse_config_json(echoed);
    CHECK(back.to_json() == echoed);
    CHECK(back.seed == 99);
    CHECK(back.beta == 0.5);
}

TEST_CASE("config validation catches bad field values") {
    RunConfig cfg = tiny_config("x");
    cfg.ablate = "everything";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config("x");
    cfg.selection_u_direction = "sideways";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config("x");
    cfg.weights = {0.9, 0.2, 0.2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("missing artifacts exit with code 2 and name the path") {
    const fs::path dir = fresh_dir("eca_cli_missing");
    CHECK(run_cli({"adapt", "--out", dir.string()}) == 2);
    CHECK(run_cli({"pretrain", "--out", dir.string()}) == 2);
    CHECK(run_cli({"evaluate", "--out", dir.string()}) == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli flags override config fields") {
    const fs::path dir = fresh_dir("eca_cli_flags");
    const fs::path cfg_path = dir / "cfg.json";
    fs::create_directories(dir);
    {
        std::ofstream out(cfg_path);
        out << tiny_config((dir / "run").string()).to_json();
    }
    REQUIRE(run_cli({"generate", "--config", cfg_path.string(), "--seed", "123"}) == 0);
    const std::string echo = slurp(dir / "run" / "generate" / "config_echo.json");
    CHECK(echo.find("\"seed\": 123") != std::string::npos);
    fs::remove_all(dir);
}

TEST_SUITE_END();
