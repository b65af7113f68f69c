#include "rankbench/metrics.hpp"

#include "rankbench/backtest.hpp"
#include "rankbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rankbench {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t pos = 0; pos < order.size();) {
        std::size_t end = pos + 1;
        while (end < order.size() && v[order[end]] == v[order[pos]]) ++end;
        const double avg = 0.5 * static_cast<double>(pos + 1 + end);
        for (std::size_t i = pos; i < end; ++i) ranks[order[i]] = avg;
        pos = end;
    }
    return ranks;
}

std::optional<double> spearman_ic(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size()) throw std::invalid_argument("spearman_ic length mismatch");
    if (y.size() < 2) throw std::invalid_argument("spearman_ic needs N >= 2");
    const std::vector<double> a = average_ranks(yhat);
    const std::vector<double> b = average_ranks(y);
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double precision_at_k(std::span<const double> yhat, std::span<const double> y, std::size_t k) {
    if (yhat.size() != y.size()) throw std::invalid_argument("precision_at_k length mismatch");
    if (k == 0) throw std::invalid_argument("precision_at_k needs k >= 1");
    std::size_t hits = 0;
    for (std::size_t i : select_topk(yhat, k))
        if (y[i] > 0.0) ++hits;
    return static_cast<double>(hits) / static_cast<double>(k);
}

std::string_view to_string(IcirScaling s) { return s == IcirScaling::None ? "none" : "sqrt_days"; }

IcirScaling parse_icir_scaling(std::string_view name) {
    if (name == "none") return IcirScaling::None;
    if (name == "sqrt_days") return IcirScaling::SqrtDays;
    throw ConfigError("metrics.icir_scaling: expected 'none' or 'sqrt_days', got '" + std::string(name) + "'");
}

MetricsReport report(const Matrix& predictions, const Matrix& realized, std::size_t k, IcirScaling scaling) {
    if (!predictions.same_shape(realized)) throw std::invalid_argument("prediction and realized matrices differ in shape");
    if (predictions.rows == 0) throw std::invalid_argument("metrics report needs at least one day");
    MetricsReport rep;
    rep.k = k;
    double ic_sum = 0.0;
    double p_sum = 0.0;
    double mse_sum = 0.0;
    for (std::size_t d = 0; d < predictions.rows; ++d) {
        const auto yhat = predictions.row(d);
        const auto y = realized.row(d);
        const std::optional<double> ic = spearman_ic(yhat, y);
        rep.ic_series.push_back(ic);
        if (ic) {
            ++rep.defined_days;
            ic_sum += *ic;
        } else {
            ++rep.undefined_days;
        }
        p_sum += precision_at_k(yhat, y, k);
        double se = 0.0;
        for (std::size_t i = 0; i < yhat.size(); ++i) se += (yhat[i] - y[i]) * (yhat[i] - y[i]);
        mse_sum += se / static_cast<double>(yhat.size());
    }
    const auto days = static_cast<double>(predictions.rows);
    rep.precision_at_k = p_sum / days;
    rep.test_mse = mse_sum / days;

    if (rep.defined_days > 0) {
        const double mean = ic_sum / static_cast<double>(rep.defined_days);
        rep.ic_mean = mean;
        double ss = 0.0;
        for (const auto& ic : rep.ic_series)
            if (ic) ss += (*ic - mean) * (*ic - mean);
        const double sd = rep.defined_days > 1 ? std::sqrt(ss / static_cast<double>(rep.defined_days - 1)) : 0.0;
        rep.ic_std = sd;
        if (sd > 0.0) {
            double ir = mean / sd;
            if (scaling == IcirScaling::SqrtDays) ir *= std::sqrt(static_cast<double>(rep.defined_days));
            rep.icir = ir;
        }
    }
    return rep;
}

}  // namespace rankbench
