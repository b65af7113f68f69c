#include "support/tempdir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

using nlohmann::json;
using testing::read_text;
using testing::TempDir;

namespace {

struct Outcome {
    int code;
    std::string output;
};

Outcome run(const TempDir& dir, const std::string& args) {
    const auto log = dir / "cli.log";
    const std::string cmd = std::string("\"") + RANKBENCH_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), read_text(log)};
}

// Synthetic bundle with a short, small model so each training call is quick.
std::filesystem::path bundle(const TempDir& dir) {
    REQUIRE(run(dir, "synth --out \"" + dir.path().string() + "\" --tickers 6 --days 70 --seed 3").code == 0);
    json j = json::parse(read_text(dir / "config.json"));
    j["window"] = 5;
    j["model"] = {{"d_model", 4}, {"n_layers", 1}, {"n_heads", 1}, {"d_ff", 8}, {"dropout", 0.0}};
    j["train"]["max_epochs"] = 2;
    j["backtest"]["k"] = 2;
    testing::write_text(dir / "config.json", j.dump(2));
    return dir / "config.json";
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("usage errors exit with 1") {
    TempDir dir("cli_usage");
    CHECK(run(dir, "").code == 1);
    CHECK(run(dir, "frobnicate").code == 1);
    CHECK(run(dir, "train").code == 1);
    CHECK(run(dir, "train --config " + q(dir / "missing.json")).code == 1);
    const Outcome v = run(dir, "--version");
    CHECK(v.code == 0);
    CHECK_FALSE(v.output.empty());
}

TEST_CASE("train, backtest and compare") {
    TempDir dir("cli_flow");
    const auto cfg = bundle(dir);
    const auto a = dir / "a", b = dir / "b";

    const Outcome ingest = run(dir, "ingest --config " + q(cfg) + " --out " + q(a));
    CHECK(ingest.code == 0);
    CHECK(std::filesystem::exists(a / "dataset_summary.json"));

    REQUIRE(run(dir, "train --config " + q(cfg) + " --out " + q(a)).code == 0);
    CHECK(std::filesystem::exists(a / "checkpoint.bin"));
    REQUIRE(run(dir, "backtest --config " + q(cfg) + " --out " + q(a)).code == 0);
    for (const char* f : {"equity_curve.csv", "portfolio_metrics.json", "predictive_metrics.json"})
        CHECK(std::filesystem::exists(a / f));

    REQUIRE(run(dir, "train --config " + q(cfg) + " --out " + q(b) + " --seed 9").code == 0);
    REQUIRE(run(dir, "backtest --config " + q(cfg) + " --out " + q(b) + " --checkpoint " + q(b / "checkpoint.bin"))
                .code == 0);
    CHECK(json::parse(read_text(b / "train_result.json")).at("seed") == 9);

    const Outcome cmp = run(dir, "compare " + q(a) + " " + q(b) + " --out " + q(dir / "cmp"));
    CHECK(cmp.code == 0);
    CHECK(cmp.output.find("MSE (a)") != std::string::npos);
    CHECK(cmp.output.find("MSE (b)") != std::string::npos);
    const std::string csv = read_text(dir / "cmp" / "comparison.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    // A results directory expands to the runs it contains.
    CHECK(run(dir, "compare " + q(dir.path())).output.find("MSE (b)") != std::string::npos);

    const Outcome missing = run(dir, "compare " + q(a) + " " + q(dir / "ghost"));
    CHECK(missing.code == 2);
    CHECK(missing.output.find("ghost") != std::string::npos);
}

TEST_CASE("configuration and data errors") {
    TempDir dir("cli_err");
    const auto cfg = bundle(dir);
    json j = json::parse(read_text(cfg));

    json bad = j;
    bad["loss"] = {{"kind", "Hinge"}, {"lambda", 1.5}};
    testing::write_text(dir / "lambda.json", bad.dump());
    const Outcome lam = run(dir, "train --config " + q(dir / "lambda.json"));
    CHECK(lam.code == 1);
    CHECK(lam.output.find("loss.lambda") != std::string::npos);

    bad = j;
    bad["backtest"]["k"] = 7;
    testing::write_text(dir / "k.json", bad.dump());
    const Outcome k = run(dir, "backtest --config " + q(dir / "k.json"));
    CHECK(k.code == 1);
    CHECK(k.output.find("backtest.k") != std::string::npos);

    bad = j;
    bad["data"]["directory"] = (dir / "absent").string();
    testing::write_text(dir / "absent.json", bad.dump());
    const Outcome io = run(dir, "train --config " + q(dir / "absent.json"));
    CHECK(io.code == 2);
    CHECK(io.output.find("absent") != std::string::npos);

    const Outcome grid = run(dir, "gridsearch --config " + q(cfg));
    CHECK(grid.code == 1);
}
