#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace rankbench {

enum class LossKind { MSE, Hinge, Margin, BPR, RankNet, WHR1, WHR2, ListNet };

inline constexpr LossKind kAllLossKinds[] = {LossKind::MSE,     LossKind::Hinge, LossKind::Margin,
                                             LossKind::BPR,     LossKind::RankNet, LossKind::WHR1,
                                             LossKind::WHR2,    LossKind::ListNet};

std::string_view to_string(LossKind kind);
// Case-sensitive; throws ConfigError on an unknown name.
LossKind parse_loss_kind(std::string_view name);

// Kinds built as (1 - lambda) * MSE + lambda * pairwise component.
bool is_pairwise(LossKind kind);
bool uses_margin(LossKind kind);
bool uses_scale(LossKind kind);
bool uses_temperature(LossKind kind);

struct LossSpec {
    LossKind kind = LossKind::MSE;
    double lambda = 0.5;
    double margin = 0.01;
    double scale = 1.0;
    double temperature = 1.0;

    // Throws ConfigError naming the offending `loss.*` key.
    void validate() const;
};

struct LossOutput {
    double value = 0.0;
    std::vector<double> grad;  // dL/dyhat
};

// Ordered pairs (i, j), i != j, y_i != y_j, in lexicographic order.
struct PairSet {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::int8_t> signs;  // sign(y_i - y_j)

    std::size_t size() const { return pairs.size(); }
};

PairSet valid_pairs(std::span<const double> y);

// 1-based rank of each entry in descending order; ties get the average rank.
std::vector<double> descending_ranks(std::span<const double> y);

// Rank weights for WHR1 (linear) and WHR2 (exponential):
//   WHR1: w = (N - rank + 1) / N      WHR2: w = exp(-(rank - 1) / N)
std::vector<double> rank_weights(std::span<const double> y, LossKind kind);

LossOutput mse(std::span<const double> yhat, std::span<const double> y);

// Pairwise term averaged over its pair set: P_valid for Hinge, Margin,
// RankNet and WHR; the pairs with y_i > y_j for BPR. An empty pair set
// gives zero value and gradient.
LossOutput pairwise_component(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec);

LossOutput combined(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec);

// Cross-entropy between softmax(y / tau) and softmax(yhat / tau).
LossOutput listnet(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec);

// Dispatches on spec.kind.
LossOutput evaluate(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec);

// log(1 + exp(x)) without overflow.
double softplus(double x);
// 1 / (1 + exp(-x)) without overflow.
double logistic(double x);

}  // namespace rankbench
