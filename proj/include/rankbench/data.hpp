#pragma once

#include "rankbench/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rankbench {

// Aligned daily close/volume panel for a fixed ticker universe.
struct MarketDataset {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;  // ISO-8601, strictly increasing
    Matrix close;                    // days x N
    Matrix volume;                   // days x N

    std::size_t days() const { return dates.size(); }
    std::size_t stocks() const { return tickers.size(); }

    // Throws DataError if any invariant is broken.
    void validate() const;
};

// True if `s` is a valid calendar date written as YYYY-MM-DD.
bool is_iso_date(std::string_view s);

// Reads `<dir>/<TICKER>.csv` for every ticker (header `date,close,volume`)
// and aligns them on the intersection of their dates.
MarketDataset ingest_csv(const std::filesystem::path& directory, std::span<const std::string> tickers);

// Writes one `<TICKER>.csv` per ticker; inverse of ingest_csv.
void write_csv(const MarketDataset& ds, const std::filesystem::path& directory);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
};

// Chronological split over window samples (anchor dates). `window` is the
// lookback length the samples were built with; it maps sample indices back
// to feature rows for normaliser fitting.
struct SplitPlan {
    IndexRange train;
    IndexRange val;
    IndexRange test;
    std::size_t window = 0;

    std::size_t samples() const { return test.end; }
    // Feature rows [0, train_feature_rows()) are the only rows visible to
    // training inputs.
    std::size_t train_feature_rows() const { return train.end + window - 1; }
};

// Number of window samples a panel of `panel_days` feature rows yields.
std::size_t sample_count(std::size_t panel_days, std::size_t window);

// Boundaries are floor(train_frac * n) and floor((train_frac + val_frac) * n).
SplitPlan plan_split(std::size_t n_samples, std::size_t window, double train_frac = 0.70,
                     double val_frac = 0.15);

// z-score scaler; std is replaced by 1 when the fitted std is zero.
struct Scaler {
    double mean = 0.0;
    double std = 1.0;
    bool degenerate = false;

    double apply(double v) const { return (v - mean) / std; }
    double invert(double v) const { return v * std + mean; }
};

inline constexpr std::size_t kFeatureChannels = 2;
inline constexpr std::size_t kReturnChannel = 0;
inline constexpr std::size_t kTurnoverChannel = 1;

// Per-day features. Row r corresponds to dataset day r + 1 (the first day has
// no return and is dropped).
struct FeaturePanel {
    std::vector<std::string> dates;
    std::size_t days = 0;
    std::size_t stocks = 0;
    std::vector<double> raw;         // days x N x F
    std::vector<double> normalized;  // days x N x F
    std::vector<Scaler> scalers;     // N x F
    std::vector<std::string> warnings;

    std::size_t index(std::size_t day, std::size_t stock, std::size_t channel) const {
        return (day * stocks + stock) * kFeatureChannels + channel;
    }
    const Scaler& scaler(std::size_t stock, std::size_t channel) const {
        return scalers[stock * kFeatureChannels + channel];
    }
    // Applies the inverse scalers to `normalized`.
    std::vector<double> denormalize() const;
};

// Raw return and turnover for every day after the first, normalised per
// stock and channel with statistics from the training rows only.
FeaturePanel build_features(const MarketDataset& ds, const SplitPlan& split);

// z-score fit (population std) over the given values.
Scaler fit_scaler(std::span<const double> values);

struct WindowSample {
    std::vector<double> x;  // T x N x F, oldest day first
    std::vector<double> y;  // N raw next-day returns
    std::string anchor_date;
    std::size_t anchor_row = 0;  // panel row of the last input day
};

// One sample per anchor row a in [T-1, days-2]; y is the raw return of the
// following day computed from `ds` prices.
std::vector<WindowSample> make_windows(const FeaturePanel& panel, const MarketDataset& ds,
                                       std::size_t window);

}  // namespace rankbench
