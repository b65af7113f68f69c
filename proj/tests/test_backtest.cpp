#include "rankbench/backtest.hpp"
#include "rankbench/error.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace rankbench;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

}  // namespace

TEST_CASE("select_topk") {
    CHECK(select_topk(std::vector<double>{0.3, 0.1, 0.5}, 2) == std::vector<std::size_t>{2, 0});
    CHECK(select_topk(std::vector<double>{1, 1, 1, 1}, 2) == std::vector<std::size_t>{0, 1});
    CHECK(select_topk(std::vector<double>{0.2, 0.9, 0.2}, 3) == std::vector<std::size_t>{1, 0, 2});
    CHECK_THROWS_AS(select_topk(std::vector<double>{1, 2}, 3), std::invalid_argument);
}

TEST_CASE("sharpe ratios of reference AR/AV rows") {
    struct Row {
        double ar, av, sr;
    };
    const Row rows[] = {{0.1478, 0.1579, 0.6637}, {0.1533, 0.1579, 0.6984}, {0.1623, 0.1585, 0.7529},
                        {0.1574, 0.1589, 0.7200}, {0.1501, 0.1582, 0.6771}, {0.1525, 0.1578, 0.6938},
                        {0.1517, 0.1583, 0.6866}, {0.1600, 0.1579, 0.7407}};
    for (const Row& r : rows) CHECK(std::abs(*sharpe_ratio(r.ar, r.av, 0.043) - r.sr) <= 0.001);
    CHECK_FALSE(sharpe_ratio(0.1, 0.0, 0.043).has_value());
}

TEST_CASE("hand-computed 3-day 4-stock fixture") {
    // Day 0 picks {0, 2}, day 1 ties at 0.5 resolve to {1, 3}, day 2 picks {0, 1}.
    const Matrix pred = from_rows({{0.4, 0.1, 0.3, 0.2}, {0.1, 0.5, 0.2, 0.5}, {0.3, 0.2, 0.1, 0.0}});
    const Matrix real = from_rows({{0.5, -0.5, 0.25, 0.0}, {0.5, -0.25, 0.5, 0.0}, {0.25, 0.25, -0.5, 0.125}});
    BacktestConfig cfg;
    cfg.k = 2;
    const BacktestResult r = run_backtest(pred, real, cfg);
    CHECK(r.holdings == std::vector<std::vector<std::size_t>>{{0, 2}, {1, 3}, {0, 1}});
    CHECK(r.daily_returns == std::vector<double>{0.375, -0.125, 0.25});
    CHECK(r.equity_curve == std::vector<double>{1.0, 1.375, 1.203125, 1.50390625});
    CHECK(r.metrics.cumulative_return == 0.50390625);
    CHECK(r.metrics.max_drawdown == -0.125);
    const double ar = std::pow(1.50390625, 84.0) - 1.0;
    // mean 1/6; deviations 5/24, -7/24, 2/24; sample variance 78/576/2.
    const double av = std::sqrt(78.0 / 1152.0) * std::sqrt(252.0);
    CHECK(r.metrics.annualized_return == doctest::Approx(ar).epsilon(1e-12));
    CHECK(r.metrics.annualized_volatility == doctest::Approx(av).epsilon(1e-12));
    CHECK(*r.metrics.sharpe_ratio == doctest::Approx((ar - 0.043) / av).epsilon(1e-12));
}

TEST_CASE("production backtest equals the naive reference") {
    Rng rng(17);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t days = 1 + rng.below(5);
        const std::size_t n = 1 + rng.below(6);
        const std::size_t k = 1 + rng.below(n);
        Matrix pred(days, n), real(days, n);
        for (double& v : pred.data) v = rep % 3 == 0 ? static_cast<double>(rng.below(3)) : rng.normal();
        for (double& v : real.data) v = 0.02 * rng.normal();
        BacktestConfig cfg;
        cfg.k = k;
        const BacktestResult r = run_backtest(pred, real, cfg);
        const auto ref = oracle::naive_backtest(pred, real, k, cfg.risk_free_rate, 252.0);
        CHECK(r.holdings == ref.holdings);
        CHECK(r.daily_returns == ref.returns);
        CHECK(r.equity_curve == ref.equity);
        CHECK(r.metrics.cumulative_return == ref.cr);
        CHECK(r.metrics.annualized_return == ref.ar);
        CHECK(r.metrics.annualized_volatility == ref.av);
        CHECK(r.metrics.max_drawdown == ref.mdd);
        CHECK(r.metrics.sharpe_ratio == ref.sr);
    }
}

TEST_CASE("zero returns") {
    const Matrix pred = from_rows({{1, 2, 3}, {3, 2, 1}});
    const Matrix real(2, 3);
    BacktestConfig cfg;
    cfg.k = 2;
    const auto m = run_backtest(pred, real, cfg).metrics;
    CHECK(m.cumulative_return == 0.0);
    CHECK(m.annualized_return == 0.0);
    CHECK(m.annualized_volatility == 0.0);
    CHECK(m.max_drawdown == 0.0);
    CHECK_FALSE(m.sharpe_ratio.has_value());
}

TEST_CASE("constant daily return closed form") {
    const double r = 0.001;
    const std::vector<double> rs(252, r);
    const auto m = portfolio_metrics(rs, BacktestConfig{});
    double growth = 1.0;
    for (int i = 0; i < 252; ++i) growth *= 1.0 + r;
    CHECK(m.cumulative_return == growth - 1.0);
    CHECK(m.annualized_return == doctest::Approx(std::pow(1.0 + r, 252) - 1.0).epsilon(1e-12));
    CHECK(m.annualized_volatility == 0.0);
    CHECK(m.max_drawdown == 0.0);
}

TEST_CASE("strictly positive returns have no drawdown") {
    Rng rng(3);
    std::vector<double> rs(50);
    for (double& v : rs) v = rng.uniform(1e-4, 0.02);
    CHECK(portfolio_metrics(rs, BacktestConfig{}).max_drawdown == 0.0);
}

TEST_CASE("drawdown monotonicity and sharpe identity") {
    Rng rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> rs(2 + rng.below(30));
        for (double& v : rs) v = 0.02 * rng.normal();
        const auto base = portfolio_metrics(rs, BacktestConfig{});
        if (base.sharpe_ratio)
            CHECK(std::abs(*base.sharpe_ratio * base.annualized_volatility + 0.043 - base.annualized_return) <= 1e-12 *
                  std::max(1.0, std::abs(base.annualized_return)));

        double growth = 1.0, peak = 1.0;
        for (double r : rs) {
            growth *= 1.0 + r;
            peak = std::max(peak, growth);
        }
        auto high = rs;
        high.push_back(peak / growth * 1.01 - 1.0);  // new all-time high
        CHECK(portfolio_metrics(high, BacktestConfig{}).max_drawdown >= base.max_drawdown);
        auto crash = rs;
        crash.push_back(-0.5);
        CHECK(portfolio_metrics(crash, BacktestConfig{}).max_drawdown <= base.max_drawdown);
    }
}

TEST_CASE("equity reconstructs from daily returns") {
    Rng rng(29);
    Matrix pred(20, 6), real(20, 6);
    for (double& v : pred.data) v = rng.normal();
    for (double& v : real.data) v = 0.03 * rng.normal();
    BacktestConfig cfg;
    cfg.k = 3;
    cfg.initial_value = 250.0;
    const auto r = run_backtest(pred, real, cfg);
    REQUIRE(r.equity_curve.size() == 21);
    CHECK(r.equity_curve[0] == 250.0);
    for (std::size_t d = 0; d < r.daily_returns.size(); ++d)
        CHECK(r.equity_curve[d + 1] == r.equity_curve[d] * (1.0 + r.daily_returns[d]));
    for (const auto& h : r.holdings) {
        CHECK(h.size() == 3);
        CHECK(h[0] != h[1]);
        CHECK(h[1] != h[2]);
        CHECK(h[0] != h[2]);
    }
}

TEST_CASE("arithmetic annualization") {
    BacktestConfig cfg;
    cfg.annualization = Annualization::Arithmetic;
    const std::vector<double> rs{0.01, 0.03};
    CHECK(portfolio_metrics(rs, cfg).annualized_return == doctest::Approx(0.02 * 252));
    CHECK(parse_annualization("geometric") == Annualization::Geometric);
    CHECK_THROWS_AS(parse_annualization("log"), ConfigError);
}

TEST_CASE("backtest errors") {
    BacktestConfig cfg;
    cfg.k = 2;
    CHECK_THROWS_AS(run_backtest(Matrix(2, 3), Matrix(3, 3), cfg), std::invalid_argument);
    Matrix real(1, 3);
    real(0, 0) = std::nan("");
    CHECK_THROWS_AS(run_backtest(Matrix(1, 3), real, cfg), DataError);
    cfg.k = 4;
    CHECK_THROWS_AS(run_backtest(Matrix(1, 3), Matrix(1, 3), cfg), ConfigError);
    cfg.k = 1;
    cfg.risk_free_rate = -0.01;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
