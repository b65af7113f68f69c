#pragma once

#include "rankbench/backtest.hpp"
#include "rankbench/losses.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/model.hpp"
#include "rankbench/train.hpp"

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace rankbench {

using ordered_json = nlohmann::ordered_json;

// One experiment. Relative paths are resolved against `base_dir`, the
// directory holding the config file.
//
//   {
//     "data":     {"directory": "data", "tickers": ["AAA", "BBB"]},
//     "split":    {"train": 0.70, "val": 0.15},
//     "window":   20,
//     "model":    {"d_model": 16, "n_layers": 1, "n_heads": 2, "d_ff": 32, "dropout": 0.0},
//     "train":    {"max_epochs": 50, "learning_rate": 0.001, "weight_decay": 0.0001,
//                  "batch_size": 1, "early_stopping_patience": 5,
//                  "lr_schedule": {"kind": "plateau", "factor": 0.5, "patience": 3, "min_lr": 0}},
//     "loss":     {"kind": "RankNet", "lambda": 0.5, "scale": 1.0},
//     "grid":     {"learning_rate": [0.001, 0.003], "lambda": [0.3, 0.7]},
//     "backtest": {"k": 5, "risk_free_rate": 0.043, "trading_days_per_year": 252,
//                  "initial_value": 1.0, "annualization": "geometric"},
//     "metrics":  {"icir_scaling": "none"},
//     "output_dir": "runs/ranknet",
//     "seed": 7,
//     "deterministic": true
//   }
//
// Every section except "data" is optional. Unknown keys are rejected, as are
// loss parameters and grid axes that do not apply to loss.kind.
struct RunConfig {
    std::string data_directory;
    std::vector<std::string> tickers;
    double train_fraction = 0.70;
    double val_fraction = 0.15;
    std::size_t window = 20;
    ModelConfig model;
    TrainConfig train;
    LossSpec loss;
    std::optional<GridSpec> grid;
    BacktestConfig backtest;
    IcirScaling icir_scaling = IcirScaling::None;
    std::string output_dir = "runs/default";
    std::uint64_t seed = 0;
    bool deterministic = false;

    std::filesystem::path base_dir;

    std::filesystem::path resolved_data_directory() const;
    std::filesystem::path resolved_output_dir() const;
    // Re-applies derived fields (window, seed) and full validation.
    void finalize();
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
// Throws IoError if unreadable, ConfigError if malformed.
RunConfig load_run_config(const std::filesystem::path& path);
ordered_json to_json(const RunConfig& cfg);

ordered_json model_config_to_json(const ModelConfig& m);  // includes window and features
ModelConfig model_config_from_json(const nlohmann::json& j);
ordered_json loss_spec_to_json(const LossSpec& spec);  // applicable parameters only
ordered_json train_config_to_json(const TrainConfig& tc);

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace rankbench
