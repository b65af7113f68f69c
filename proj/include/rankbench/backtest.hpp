#pragma once

#include "rankbench/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rankbench {

enum class Annualization {
    Geometric,   // AR = (1 + CR)^(days_per_year / days) - 1
    Arithmetic,  // AR = mean(r) * days_per_year
};

std::string_view to_string(Annualization a);
Annualization parse_annualization(std::string_view name);

struct BacktestConfig {
    std::size_t k = 5;
    double risk_free_rate = 0.043;
    std::size_t trading_days_per_year = 252;
    double initial_value = 1.0;
    Annualization annualization = Annualization::Geometric;

    void validate() const;                      // throws ConfigError
    void validate_for(std::size_t stocks) const;  // also checks k <= N
};

// Returns are decimals. An undefined Sharpe ratio (zero volatility) is empty.
struct PortfolioMetrics {
    double cumulative_return = 0.0;
    double annualized_return = 0.0;
    double annualized_volatility = 0.0;
    std::optional<double> sharpe_ratio;
    double max_drawdown = 0.0;  // <= 0
};

struct BacktestResult {
    std::vector<double> equity_curve;  // days + 1 values, [0] = initial value
    std::vector<std::vector<std::size_t>> holdings;
    std::vector<double> daily_returns;
    PortfolioMetrics metrics;
};

// Indices of the k largest predictions in descending order; equal
// predictions are ordered by ascending stock index.
std::vector<std::size_t> select_topk(std::span<const double> predictions, std::size_t k);

// (AR - rf) / AV, empty when AV == 0.
std::optional<double> sharpe_ratio(double annualized_return, double annualized_volatility, double risk_free_rate);

PortfolioMetrics portfolio_metrics(std::span<const double> daily_returns, const BacktestConfig& cfg);

// Daily rebalanced, long-only, equal-weight top-k portfolio without costs.
BacktestResult run_backtest(const Matrix& predictions, const Matrix& realized, const BacktestConfig& cfg);

}  // namespace rankbench
