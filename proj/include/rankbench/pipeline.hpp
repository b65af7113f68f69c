#pragma once

#include "rankbench/backtest.hpp"
#include "rankbench/config.hpp"
#include "rankbench/data.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/train.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rankbench {

struct PreparedData {
    MarketDataset dataset;
    SplitPlan split;
    FeaturePanel panel;
    std::vector<WindowSample> samples;

    std::span<const WindowSample> train() const { return slice(split.train); }
    std::span<const WindowSample> val() const { return slice(split.val); }
    std::span<const WindowSample> test() const { return slice(split.test); }
    // Date on which the returns of sample `i` are realized.
    const std::string& target_date(std::size_t i) const { return panel.dates[samples[i].anchor_row + 1]; }

private:
    std::span<const WindowSample> slice(IndexRange r) const {
        return std::span<const WindowSample>(samples).subspan(r.begin, r.size());
    }
};

PreparedData prepare_data(const RunConfig& cfg);
PreparedData prepare_data(const RunConfig& cfg, MarketDataset dataset);

// Artifacts written by each command (file names inside the output directory).
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kTrainResultFile = "train_result.json";
inline constexpr const char* kLeaderboardFile = "leaderboard.json";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kDatasetSummaryFile = "dataset_summary.json";
inline constexpr const char* kEquityCurveFile = "equity_curve.csv";
inline constexpr const char* kPortfolioMetricsFile = "portfolio_metrics.json";
inline constexpr const char* kPredictiveMetricsFile = "predictive_metrics.json";
inline constexpr const char* kIcSeriesFile = "ic_series.csv";
inline constexpr const char* kComparisonCsvFile = "comparison.csv";
inline constexpr const char* kComparisonTextFile = "comparison.txt";

ordered_json train_result_to_json(const TrainResult& r);
ordered_json leaderboard_to_json(const GridResult& g);
ordered_json portfolio_metrics_to_json(const PortfolioMetrics& m, const RunConfig& cfg, std::size_t days);
ordered_json predictive_metrics_to_json(const MetricsReport& m, const RunConfig& cfg);

void run_ingest(const RunConfig& cfg, const std::filesystem::path& out_dir);
void run_train(const RunConfig& cfg, const std::filesystem::path& out_dir);
void run_gridsearch(const RunConfig& cfg, const std::filesystem::path& out_dir);
void run_backtest(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir);

// One row per run directory with the CR/AR/AV/SR/MDD/IC/StdIC/ICIR/P@k/MSE
// columns. Writes comparison.csv and comparison.txt to out_dir when it is
// non-empty and returns the aligned text table.
std::string run_compare(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_dir);

}  // namespace rankbench
