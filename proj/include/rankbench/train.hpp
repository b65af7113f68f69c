#pragma once

#include "rankbench/data.hpp"
#include "rankbench/losses.hpp"
#include "rankbench/model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankbench {

enum class ScheduleKind { Plateau, Cosine, Constant };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

struct LrSchedule {
    ScheduleKind kind = ScheduleKind::Plateau;
    double factor = 0.5;      // plateau: multiplier on each reduction
    std::size_t patience = 3;  // plateau: epochs without improvement before reducing
    double min_lr = 0.0;
};

struct TrainConfig {
    std::size_t max_epochs = 50;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::size_t batch_size = 1;  // anchor days per optimizer step
    std::size_t early_stopping_patience = 5;
    LrSchedule lr_schedule;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// Decoupled weight decay Adam.
class AdamW {
public:
    AdamW(std::size_t size, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // theta <- theta * (1 - lr * wd), then the bias-corrected Adam step.
    void step(std::span<double> params, std::span<const double> grads, double lr);

    std::size_t steps() const { return t_; }

private:
    double wd_, b1_, b2_, eps_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    ModelParams best_params;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    std::size_t stopped_epoch = 0;
    double best_val_loss = 0.0;
    ModelConfig model;
    LossSpec loss;
    TrainConfig train;
};

// Mean per-day loss with dropout off; every day weighs equally.
double evaluate_loss(const ModelParams& params, std::span<const WindowSample> samples, const LossSpec& spec);

// Predictions for each sample, one row per day.
Matrix predict(const ModelParams& params, std::span<const WindowSample> samples);

// Day-level batches (all N stocks of one anchor day), seeded shuffling, early
// stopping on validation loss, returns the best-validation parameters.
// Throws TrainingError on a non-finite loss.
TrainResult train(const ModelConfig& model, std::span<const WindowSample> train_samples,
                  std::span<const WindowSample> val_samples, const LossSpec& spec, const TrainConfig& tc);

// Candidate values per axis; an empty axis keeps the base value.
struct GridSpec {
    std::vector<double> dropout;
    std::vector<std::size_t> d_model;
    std::vector<std::size_t> d_ff;
    std::vector<double> learning_rate;
    std::vector<double> lambda;
    std::vector<double> margin;
    std::vector<double> scale;
    std::vector<double> temperature;

    std::size_t size() const;
    // Rejects axes that do not apply to `kind` and invalid candidate values.
    void validate_for(LossKind kind, const ModelConfig& base) const;
};

struct GridPoint {
    std::size_t index = 0;
    ModelConfig model;
    LossSpec loss;
    TrainConfig train;
};

// Row-major cartesian product, axes in declaration order, last axis fastest.
GridPoint grid_point(const GridSpec& grid, std::size_t index, const ModelConfig& model, const LossSpec& loss,
                     const TrainConfig& tc);

struct LeaderboardEntry {
    GridPoint point;
    bool failed = false;
    std::string error;
    double val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::size_t stopped_epoch = 0;
};

struct GridResult {
    GridPoint best;
    TrainResult best_result;
    std::vector<LeaderboardEntry> leaderboard;  // successes by val loss then index, failures last
};

// `threads` == 0 uses the hardware concurrency. Results do not depend on it.
GridResult grid_search(const GridSpec& grid, const ModelConfig& model, const LossSpec& loss, const TrainConfig& tc,
                       std::span<const WindowSample> train_samples, std::span<const WindowSample> val_samples,
                       std::size_t threads = 1);

}  // namespace rankbench
