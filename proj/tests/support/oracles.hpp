#pragma once

// Reference implementations used to check the production code. They favour
// the plainest possible formulation over speed.

#include "rankbench/backtest.hpp"
#include "rankbench/losses.hpp"
#include "rankbench/matrix.hpp"
#include "rankbench/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace oracle {

using rankbench::LossKind;
using rankbench::LossSpec;

inline std::vector<double> normal_vector(rankbench::Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

// Values drawn from a small integer lattice so ties are frequent.
inline std::vector<double> tied_vector(rankbench::Rng& rng, std::size_t n, std::size_t levels) {
    std::vector<double> v(n);
    for (double& x : v) x = static_cast<double>(rng.below(levels)) * 0.25 - 0.5;
    return v;
}

inline bool all_distinct(std::span<const double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
}

// Descending rank by counting: rank = #greater + (#equal + 1) / 2.
inline std::vector<double> naive_descending_ranks(std::span<const double> y) {
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        std::size_t greater = 0, equal = 0;
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[j] > y[i]) ++greater;
            if (y[j] == y[i]) ++equal;
        }
        r[i] = static_cast<double>(greater) + 0.5 * static_cast<double>(equal + 1);
    }
    return r;
}

// Ascending average ranks by counting.
inline std::vector<double> naive_ascending_ranks(std::span<const double> y) {
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[j] < y[i]) ++less;
            if (y[j] == y[i]) ++equal;
        }
        r[i] = static_cast<double>(less) + 0.5 * static_cast<double>(equal + 1);
    }
    return r;
}

// Non-default parameters so every field is exercised.
inline LossSpec spec_for(LossKind kind, double lambda = 0.5) {
    LossSpec s;
    s.kind = kind;
    s.lambda = lambda;
    s.margin = 0.05;
    s.scale = 1.5;
    s.temperature = 0.7;
    return s;
}

inline double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// Double loop over (i, j) with explicit per-kind formulas.
inline double naive_pairwise_value(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    const std::size_t n = y.size();
    std::vector<double> w(n, 1.0);
    if (spec.kind == LossKind::WHR1 || spec.kind == LossKind::WHR2) {
        const std::vector<double> rank = naive_descending_ranks(y);
        const auto nd = static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k)
            w[k] = spec.kind == LossKind::WHR1 ? (nd - rank[k] + 1.0) / nd : std::exp(-(rank[k] - 1.0) / nd);
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || y[i] == y[j]) continue;
            const double s = y[i] > y[j] ? 1.0 : -1.0;
            const double d = yhat[i] - yhat[j];
            switch (spec.kind) {
                case LossKind::Hinge:
                case LossKind::Margin:
                    sum += std::max(0.0, spec.margin - s * d);
                    break;
                case LossKind::WHR1:
                case LossKind::WHR2:
                    sum += std::max(0.0, spec.margin - s * d) * (w[i] * w[j]);
                    break;
                case LossKind::BPR:
                    if (y[i] < y[j]) continue;
                    sum += stable_softplus(-d);
                    break;
                case LossKind::RankNet:
                    sum += stable_softplus(-spec.scale * s * d);
                    break;
                default: break;
            }
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline double naive_mse_value(std::span<const double> yhat, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (yhat[i] - y[i]) * (yhat[i] - y[i]);
    return s / static_cast<double>(y.size());
}

// Direct softmax without the log-sum-exp shift; fine for moderate inputs.
inline double naive_listnet_value(std::span<const double> yhat, std::span<const double> y, double tau) {
    double zt = 0.0, zp = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        zt += std::exp(y[k] / tau);
        zp += std::exp(yhat[k] / tau);
    }
    double v = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) v -= std::exp(y[k] / tau) / zt * std::log(std::exp(yhat[k] / tau) / zp);
    return v;
}

inline double naive_loss_value(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    if (spec.kind == LossKind::MSE) return naive_mse_value(yhat, y);
    if (spec.kind == LossKind::ListNet) return naive_listnet_value(yhat, y, spec.temperature);
    return (1.0 - spec.lambda) * naive_mse_value(yhat, y) + spec.lambda * naive_pairwise_value(yhat, y, spec);
}

// Central finite differences of f at x with step h.
inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = f(x);
        x[i] = orig - h;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Largest componentwise |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / den);
    }
    return worst;
}

// Smallest distance of any hinge argument m - s * (yhat_i - yhat_j) from its
// kink at zero; infinity for kinds without a hinge.
inline double hinge_kink_distance(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    if (!rankbench::uses_margin(spec.kind)) return INFINITY;
    double best = INFINITY;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (i == j || y[i] == y[j]) continue;
            const double s = y[i] > y[j] ? 1.0 : -1.0;
            best = std::min(best, std::abs(spec.margin - s * (yhat[i] - yhat[j])));
        }
    return best;
}

struct NaiveBacktest {
    std::vector<double> equity;
    std::vector<double> returns;
    std::vector<std::vector<std::size_t>> holdings;
    double cr = 0, ar = 0, av = 0, mdd = 0;
    std::optional<double> sr;
};

// Full sort of (prediction, index) keys, explicit equity loop, metrics from
// the equity curve.
inline NaiveBacktest naive_backtest(const rankbench::Matrix& pred, const rankbench::Matrix& real, std::size_t k,
                                    double rf, double per_year) {
    NaiveBacktest out;
    out.equity.push_back(1.0);
    for (std::size_t d = 0; d < pred.rows; ++d) {
        std::vector<std::pair<double, std::size_t>> keys;
        for (std::size_t i = 0; i < pred.cols; ++i) keys.emplace_back(-pred(d, i), i);
        std::sort(keys.begin(), keys.end());
        std::vector<std::size_t> pick;
        double sum = 0.0;
        for (std::size_t q = 0; q < k; ++q) {
            pick.push_back(keys[q].second);
            sum += real(d, keys[q].second);
        }
        const double r = sum / static_cast<double>(k);
        out.returns.push_back(r);
        out.holdings.push_back(pick);
        out.equity.push_back(out.equity.back() * (1.0 + r));
    }
    const auto days = static_cast<double>(out.returns.size());
    out.cr = out.equity.back() / out.equity.front() - 1.0;
    out.ar = std::pow(out.equity.back() / out.equity.front(), per_year / days) - 1.0;
    double mean = 0.0;
    for (double r : out.returns) mean += r;
    mean /= days;
    bool constant = true;
    for (double r : out.returns) constant = constant && r == out.returns.front();
    if (!constant) {
        double ss = 0.0;
        for (double r : out.returns) ss += (r - mean) * (r - mean);
        out.av = std::sqrt(ss / (days - 1.0)) * std::sqrt(per_year);
        out.sr = (out.ar - rf) / out.av;
    }
    for (std::size_t d = 1; d < out.equity.size(); ++d) {
        const double peak = *std::max_element(out.equity.begin(), out.equity.begin() + static_cast<std::ptrdiff_t>(d) + 1);
        out.mdd = std::min(out.mdd, out.equity[d] / peak - 1.0);
    }
    return out;
}

// Rank-then-Pearson with a textbook two-pass formula.
inline std::optional<double> naive_spearman(std::span<const double> a, std::span<const double> b) {
    const std::vector<double> ra = naive_ascending_ranks(a);
    const std::vector<double> rb = naive_ascending_ranks(b);
    const auto n = static_cast<double>(ra.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return std::nullopt;
    return cov / std::sqrt(va) / std::sqrt(vb);
}

}  // namespace oracle
