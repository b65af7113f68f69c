#pragma once

#include "rankbench/config.hpp"
#include "rankbench/data.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace rankbench {

// Synthetic market in which the next-day return of each stock is a noisy
// linear function of today's turnover shock:
//
//   turnover[d] = base_i * (1 + 0.3 * u[d]),   u ~ N(0, 1) clipped to [-3, 3]
//   r[d + 1]    = signal * u[d] + noise_ratio * signal * eps,   eps ~ N(0, 1)
//
// Volume is turnover * close, so the shock is observable from the CSV files.
struct SynthOptions {
    std::size_t tickers = 20;
    std::size_t days = 400;
    std::uint64_t seed = 1;
    double signal = 0.01;
    double noise_ratio = 0.3;
    std::string start_date = "2015-01-05";
};

MarketDataset generate_synthetic(const SynthOptions& opt);

// Writes `<dir>/data/<TICKER>.csv` and a ready-to-run `<dir>/config.json`.
// Returns the config path.
std::filesystem::path write_synthetic_bundle(const SynthOptions& opt, const std::filesystem::path& dir);

// A small configuration suited to the synthetic market.
RunConfig synthetic_run_config(const MarketDataset& ds, std::string data_directory);

}  // namespace rankbench
