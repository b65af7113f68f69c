#include "rankbench/backtest.hpp"

#include "rankbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rankbench {

std::string_view to_string(Annualization a) { return a == Annualization::Geometric ? "geometric" : "arithmetic"; }

Annualization parse_annualization(std::string_view name) {
    if (name == "geometric") return Annualization::Geometric;
    if (name == "arithmetic") return Annualization::Arithmetic;
    throw ConfigError("backtest.annualization: expected 'geometric' or 'arithmetic', got '" + std::string(name) + "'");
}

void BacktestConfig::validate() const {
    if (k < 1) throw ConfigError("backtest.k must be >= 1");
    if (!(risk_free_rate >= 0.0) || !std::isfinite(risk_free_rate)) throw ConfigError("backtest.risk_free_rate must be >= 0");
    if (trading_days_per_year < 1) throw ConfigError("backtest.trading_days_per_year must be >= 1");
    if (!(initial_value > 0.0)) throw ConfigError("backtest.initial_value must be > 0");
}

void BacktestConfig::validate_for(std::size_t stocks) const {
    validate();
    if (k > stocks)
        throw ConfigError("backtest.k = " + std::to_string(k) + " exceeds the universe size " + std::to_string(stocks));
}

std::vector<std::size_t> select_topk(std::span<const double> predictions, std::size_t k) {
    if (k > predictions.size())
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds " + std::to_string(predictions.size()) +
                                    " predictions");
    std::vector<std::size_t> idx(predictions.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (predictions[a] != predictions[b]) return predictions[a] > predictions[b];
                          return a < b;
                      });
    idx.resize(k);
    return idx;
}

std::optional<double> sharpe_ratio(double annualized_return, double annualized_volatility, double risk_free_rate) {
    if (!(annualized_volatility > 0.0)) return std::nullopt;
    return (annualized_return - risk_free_rate) / annualized_volatility;
}

PortfolioMetrics portfolio_metrics(std::span<const double> daily_returns, const BacktestConfig& cfg) {
    if (daily_returns.empty()) throw std::invalid_argument("portfolio metrics need at least one daily return");
    const auto days = static_cast<double>(daily_returns.size());
    const auto per_year = static_cast<double>(cfg.trading_days_per_year);
    PortfolioMetrics m;

    double growth = 1.0;
    double peak = 1.0;
    double sum = 0.0;
    for (double r : daily_returns) {
        growth *= 1.0 + r;
        peak = std::max(peak, growth);
        m.max_drawdown = std::min(m.max_drawdown, growth / peak - 1.0);
        sum += r;
    }
    m.cumulative_return = growth - 1.0;
    const double mean = sum / days;
    m.annualized_return = cfg.annualization == Annualization::Geometric ? std::pow(growth, per_year / days) - 1.0
                                                                          : mean * per_year;
    const auto [lo, hi] = std::minmax_element(daily_returns.begin(), daily_returns.end());
    if (*lo != *hi) {
        double ss = 0.0;
        for (double r : daily_returns) ss += (r - mean) * (r - mean);
        m.annualized_volatility = std::sqrt(ss / (days - 1.0)) * std::sqrt(per_year);
    }
    m.sharpe_ratio = sharpe_ratio(m.annualized_return, m.annualized_volatility, cfg.risk_free_rate);
    return m;
}

BacktestResult run_backtest(const Matrix& predictions, const Matrix& realized, const BacktestConfig& cfg) {
    if (!predictions.same_shape(realized)) throw std::invalid_argument("prediction and realized matrices differ in shape");
    if (predictions.rows == 0) throw std::invalid_argument("backtest needs at least one day");
    cfg.validate_for(predictions.cols);

    BacktestResult res;
    res.equity_curve.reserve(predictions.rows + 1);
    res.equity_curve.push_back(cfg.initial_value);
    for (std::size_t d = 0; d < predictions.rows; ++d) {
        std::vector<std::size_t> picks = select_topk(predictions.row(d), cfg.k);
        double r = 0.0;
        for (std::size_t i : picks) {
            const double v = realized(d, i);
            if (!std::isfinite(v)) throw DataError("non-finite realized return on test day " + std::to_string(d));
            r += v;
        }
        r /= static_cast<double>(cfg.k);
        res.daily_returns.push_back(r);
        res.equity_curve.push_back(res.equity_curve.back() * (1.0 + r));
        res.holdings.push_back(std::move(picks));
    }
    res.metrics = portfolio_metrics(res.daily_returns, cfg);
    return res;
}

}  // namespace rankbench
