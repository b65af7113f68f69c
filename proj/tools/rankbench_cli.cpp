// rankbench command-line front end. Talks to the library only through the
// C interface in rankbench.h.

#include "rankbench/rankbench.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int exit_code(rb_status s) {
    if (s == RB_OK) return kExitOk;
    return (s == RB_ERR_CONFIG || s == RB_ERR_INVALID_ARGUMENT) ? kExitUsage : kExitRuntime;
}

int report(rb_status s, const char* command) {
    if (s != RB_OK) std::fprintf(stderr, "rankbench %s: %s: %s\n", command, rb_status_name(s), rb_last_error());
    return exit_code(s);
}

struct ConfigDeleter {
    void operator()(rb_config* c) const { rb_config_free(c); }
};
using ConfigPtr = std::unique_ptr<rb_config, ConfigDeleter>;

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

rb_status load(const CommonOptions& o, ConfigPtr& out) {
    rb_config* raw = nullptr;
    rb_status s = rb_config_load(o.config.c_str(), &raw);
    if (s != RB_OK) return s;
    out.reset(raw);
    if (o.seed) {
        s = rb_config_set_seed(raw, *o.seed);
        if (s != RB_OK) return s;
    }
    if (o.deterministic) {
        s = rb_config_set_deterministic(raw, 1);
        if (s != RB_OK) return s;
    }
    if (!o.out.empty()) s = rb_config_set_output_dir(raw, o.out.c_str());
    return s;
}

std::string output_dir(const rb_config* c) {
    std::size_t needed = 0;
    rb_config_output_dir(c, nullptr, 0, &needed);
    std::string buf(needed, '\0');
    rb_config_output_dir(c, buf.data(), buf.size(), nullptr);
    buf.resize(needed ? needed - 1 : 0);
    return buf;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_seed) {
    cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory (overrides output_dir)");
    if (with_seed) {
        cmd->add_option("--seed", o.seed, "Override the config seed");
        cmd->add_flag("--deterministic", o.deterministic, "Single-threaded, bit-reproducible execution");
    }
}

// Expands a results directory (one holding run subdirectories) and config
// files into run directories.
std::optional<std::vector<std::string>> resolve_runs(const std::vector<std::string>& args, rb_status& status) {
    namespace fs = std::filesystem;
    std::vector<std::string> runs;
    for (const auto& a : args) {
        if (fs::is_regular_file(a)) {
            rb_config* raw = nullptr;
            status = rb_config_load(a.c_str(), &raw);
            if (status != RB_OK) return std::nullopt;
            ConfigPtr c(raw);
            runs.push_back(output_dir(c.get()));
        } else if (fs::is_directory(a) && !fs::exists(fs::path(a) / "portfolio_metrics.json")) {
            std::vector<std::string> found;
            for (const auto& e : fs::directory_iterator(a))
                if (e.is_directory() && fs::exists(e.path() / "portfolio_metrics.json")) found.push_back(e.path().string());
            std::sort(found.begin(), found.end());
            if (found.empty()) runs.push_back(a);  // let the library name the missing file
            runs.insert(runs.end(), found.begin(), found.end());
        } else {
            runs.push_back(a);
        }
    }
    return runs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stock-ranking loss benchmark: train, backtest and compare ranking losses"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rb_version()));

    CommonOptions ingest_opt, train_opt, grid_opt, bt_opt;
    std::string checkpoint;

    auto* ingest = app.add_subcommand("ingest", "Load and validate the CSV universe; write dataset_summary.json");
    add_common(ingest, ingest_opt, false);

    auto* train = app.add_subcommand("train", "Train one model; write checkpoint.bin, train_result.json, manifest.json");
    add_common(train, train_opt, true);

    auto* grid = app.add_subcommand("gridsearch", "Grid search over the config's 'grid' section");
    add_common(grid, grid_opt, true);

    auto* bt = app.add_subcommand("backtest", "Top-k backtest and predictive metrics on the test split");
    add_common(bt, bt_opt, true);
    bt->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate (default: <out>/checkpoint.bin)");

    std::vector<std::string> compare_runs;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "Tabulate metrics of completed runs");
    compare->add_option("runs", compare_runs, "Run directories, a results directory, or config files")->required();
    compare->add_option("--out", compare_out, "Directory for comparison.csv / comparison.txt");

    rb_synth_options synth_opt;
    rb_synth_default_options(&synth_opt);
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic market and a sample config");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--seed", synth_opt.seed, "Generator seed");
    synth->add_option("--tickers", synth_opt.tickers, "Number of tickers")->check(CLI::PositiveNumber);
    synth->add_option("--days", synth_opt.days, "Number of trading days")->check(CLI::Range(2, 1000000));
    synth->add_option("--noise-ratio", synth_opt.noise_ratio, "Noise std as a multiple of the signal std");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    auto run_with_config = [](const CommonOptions& o, const char* name, auto&& body) {
        ConfigPtr cfg;
        rb_status s = load(o, cfg);
        if (s == RB_OK) s = body(cfg.get());
        return report(s, name);
    };

    if (*ingest)
        return run_with_config(ingest_opt, "ingest", [](rb_config* c) { return rb_run_ingest(c, nullptr); });
    if (*train)
        return run_with_config(train_opt, "train", [](rb_config* c) {
            const rb_status s = rb_run_train(c, nullptr);
            if (s == RB_OK) std::printf("trained model written to %s\n", output_dir(c).c_str());
            return s;
        });
    if (*grid)
        return run_with_config(grid_opt, "gridsearch", [](rb_config* c) {
            const rb_status s = rb_run_gridsearch(c, nullptr);
            if (s == RB_OK) std::printf("grid search results written to %s\n", output_dir(c).c_str());
            return s;
        });
    if (*bt)
        return run_with_config(bt_opt, "backtest", [&](rb_config* c) {
            const std::string dir = output_dir(c);
            const std::string ckpt =
                checkpoint.empty() ? (std::filesystem::path(dir) / "checkpoint.bin").string() : checkpoint;
            const rb_status s = rb_run_backtest(c, ckpt.c_str(), nullptr);
            if (s == RB_OK) std::printf("backtest artifacts written to %s\n", dir.c_str());
            return s;
        });
    if (*compare) {
        rb_status s = RB_OK;
        const auto runs = resolve_runs(compare_runs, s);
        if (!runs) return report(s, "compare");
        std::vector<const char*> ptrs;
        for (const auto& r : *runs) ptrs.push_back(r.c_str());
        const char* out = compare_out.empty() ? nullptr : compare_out.c_str();
        std::size_t needed = 0;
        s = rb_run_compare(ptrs.data(), ptrs.size(), out, nullptr, 0, &needed);
        if (s != RB_OK) return report(s, "compare");
        // Second call only renders the text; the files are already written.
        std::string text(needed, '\0');
        s = rb_run_compare(ptrs.data(), ptrs.size(), nullptr, text.data(), text.size(), nullptr);
        if (s != RB_OK) return report(s, "compare");
        std::fputs(text.c_str(), stdout);
        return kExitOk;
    }
    if (*synth) {
        const rb_status s = rb_synth_write(&synth_opt, synth_out.c_str());
        if (s == RB_OK) std::printf("synthetic market written to %s (config: %s/config.json)\n", synth_out.c_str(), synth_out.c_str());
        return report(s, "synth");
    }
    return kExitUsage;
}
