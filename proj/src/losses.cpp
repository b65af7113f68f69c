#include "rankbench/losses.hpp"

#include "rankbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rankbench {
namespace {

void check_lengths(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size())
        throw std::invalid_argument("prediction/target length mismatch: " + std::to_string(yhat.size()) + " vs " +
                                    std::to_string(y.size()));
    if (y.empty()) throw std::invalid_argument("loss needs at least one item");
}

}  // namespace

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::MSE: return "MSE";
        case LossKind::Hinge: return "Hinge";
        case LossKind::Margin: return "Margin";
        case LossKind::BPR: return "BPR";
        case LossKind::RankNet: return "RankNet";
        case LossKind::WHR1: return "WHR1";
        case LossKind::WHR2: return "WHR2";
        case LossKind::ListNet: return "ListNet";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view name) {
    for (LossKind k : kAllLossKinds)
        if (to_string(k) == name) return k;
    throw ConfigError("loss.kind: unknown loss '" + std::string(name) +
                      "' (expected MSE, Hinge, Margin, BPR, RankNet, WHR1, WHR2 or ListNet)");
}

bool is_pairwise(LossKind kind) { return kind != LossKind::MSE && kind != LossKind::ListNet; }

bool uses_margin(LossKind kind) {
    return kind == LossKind::Hinge || kind == LossKind::Margin || kind == LossKind::WHR1 || kind == LossKind::WHR2;
}

bool uses_scale(LossKind kind) { return kind == LossKind::RankNet; }

bool uses_temperature(LossKind kind) { return kind == LossKind::ListNet; }

void LossSpec::validate() const {
    if (is_pairwise(kind) && !(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("loss.lambda must lie in [0, 1], got " + std::to_string(lambda));
    if (uses_margin(kind) && !(margin >= 0.0 && std::isfinite(margin)))
        throw ConfigError("loss.margin must be >= 0, got " + std::to_string(margin));
    if (uses_scale(kind) && !(scale > 0.0 && std::isfinite(scale)))
        throw ConfigError("loss.scale must be > 0, got " + std::to_string(scale));
    if (uses_temperature(kind) && !(temperature > 0.0 && std::isfinite(temperature)))
        throw ConfigError("loss.temperature must be > 0, got " + std::to_string(temperature));
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

PairSet valid_pairs(std::span<const double> y) {
    PairSet ps;
    const auto n = static_cast<std::uint32_t>(y.size());
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
            if (i == j || y[i] == y[j]) continue;
            ps.pairs.emplace_back(i, j);
            ps.signs.push_back(y[i] > y[j] ? 1 : -1);
        }
    }
    return ps;
}

std::vector<double> descending_ranks(std::span<const double> y) {
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    std::vector<double> ranks(y.size());
    for (std::size_t pos = 0; pos < order.size();) {
        std::size_t end = pos + 1;
        while (end < order.size() && y[order[end]] == y[order[pos]]) ++end;
        // positions pos..end-1 share ranks pos+1..end
        const double avg = 0.5 * static_cast<double>(pos + 1 + end);
        for (std::size_t k = pos; k < end; ++k) ranks[order[k]] = avg;
        pos = end;
    }
    return ranks;
}

std::vector<double> rank_weights(std::span<const double> y, LossKind kind) {
    const auto n = static_cast<double>(y.size());
    std::vector<double> w = descending_ranks(y);
    for (double& r : w) {
        if (kind == LossKind::WHR1)
            r = (n - r + 1.0) / n;
        else if (kind == LossKind::WHR2)
            r = std::exp(-(r - 1.0) / n);
        else
            throw std::invalid_argument("rank weights only defined for WHR1/WHR2");
    }
    return w;
}

LossOutput mse(std::span<const double> yhat, std::span<const double> y) {
    check_lengths(yhat, y);
    const auto n = static_cast<double>(y.size());
    LossOutput out;
    out.grad.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double diff = yhat[i] - y[i];
        out.value += diff * diff;
        out.grad[i] = 2.0 * diff / n;
    }
    out.value /= n;
    return out;
}

LossOutput pairwise_component(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    if (!is_pairwise(spec.kind))
        throw std::invalid_argument("pairwise_component called with non-pairwise kind " + std::string(to_string(spec.kind)));
    check_lengths(yhat, y);

    const PairSet ps = valid_pairs(y);
    const bool weighted = spec.kind == LossKind::WHR1 || spec.kind == LossKind::WHR2;
    const std::vector<double> w = weighted ? rank_weights(y, spec.kind) : std::vector<double>{};

    LossOutput out;
    out.grad.assign(y.size(), 0.0);
    std::size_t count = 0;
    for (std::size_t p = 0; p < ps.size(); ++p) {
        const auto [i, j] = ps.pairs[p];
        const double s = ps.signs[p];
        const double diff = yhat[i] - yhat[j];
        double term = 0.0;
        double dterm = 0.0;  // d term / d diff
        switch (spec.kind) {
            case LossKind::Hinge:
            case LossKind::Margin:
            case LossKind::WHR1:
            case LossKind::WHR2: {
                const double slack = spec.margin - s * diff;
                if (slack > 0.0) {
                    term = slack;
                    dterm = -s;
                }
                if (weighted) {
                    const double wij = w[i] * w[j];
                    term *= wij;
                    dterm *= wij;
                }
                break;
            }
            case LossKind::BPR:
                if (s < 0) continue;
                term = softplus(-diff);
                dterm = -logistic(-diff);
                break;
            case LossKind::RankNet: {
                const double z = -spec.scale * s * diff;
                term = softplus(z);
                dterm = -spec.scale * s * logistic(z);
                break;
            }
            default: break;
        }
        ++count;
        out.value += term;
        out.grad[i] += dterm;
        out.grad[j] -= dterm;
    }
    if (count > 0) {
        const auto c = static_cast<double>(count);
        out.value /= c;
        for (double& g : out.grad) g /= c;
    }
    return out;
}

LossOutput combined(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0)) throw ConfigError("loss.lambda must lie in [0, 1]");
    const LossOutput point = mse(yhat, y);
    const LossOutput pair = pairwise_component(yhat, y, spec);
    const double a = 1.0 - spec.lambda;
    const double b = spec.lambda;
    LossOutput out;
    out.value = a * point.value + b * pair.value;
    out.grad.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.grad[i] = a * point.grad[i] + b * pair.grad[i];
    return out;
}

LossOutput listnet(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    if (!(spec.temperature > 0.0)) throw ConfigError("loss.temperature must be > 0");
    check_lengths(yhat, y);
    const std::size_t n = y.size();
    const double inv_tau = 1.0 / spec.temperature;

    auto log_softmax = [&](std::span<const double> x) {
        std::vector<double> z(n);
        double top = -INFINITY;
        for (std::size_t k = 0; k < n; ++k) {
            z[k] = x[k] * inv_tau;
            top = std::max(top, z[k]);
        }
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - top);
        const double lse = top + std::log(sum);
        for (double& v : z) v -= lse;
        return z;
    };
    const std::vector<double> log_p_true = log_softmax(y);
    const std::vector<double> log_p_pred = log_softmax(yhat);

    LossOutput out;
    out.grad.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double pt = std::exp(log_p_true[k]);
        out.value -= pt * log_p_pred[k];
        out.grad[k] = inv_tau * (std::exp(log_p_pred[k]) - pt);
    }
    return out;
}

LossOutput evaluate(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
    switch (spec.kind) {
        case LossKind::MSE: return mse(yhat, y);
        case LossKind::ListNet: return listnet(yhat, y, spec);
        default: return combined(yhat, y, spec);
    }
}

}  // namespace rankbench
