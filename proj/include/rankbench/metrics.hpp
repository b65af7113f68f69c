#pragma once

#include "rankbench/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rankbench {

// 1-based ascending ranks; ties get the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> v);

// Pearson correlation of average ranks. Empty when either side is constant.
std::optional<double> spearman_ic(std::span<const double> yhat, std::span<const double> y);

// Share of the top-k predicted stocks (select_topk order) with y > 0.
double precision_at_k(std::span<const double> yhat, std::span<const double> y, std::size_t k);

enum class IcirScaling {
    None,      // mean / std
    SqrtDays,  // mean / std * sqrt(defined days)
};

std::string_view to_string(IcirScaling s);
IcirScaling parse_icir_scaling(std::string_view name);

struct MetricsReport {
    std::vector<std::optional<double>> ic_series;  // one per day; empty = constant cross-section
    std::optional<double> ic_mean;
    std::optional<double> ic_std;  // sample std; 0 with a single defined day
    std::optional<double> icir;
    double precision_at_k = 0.0;
    double test_mse = 0.0;
    std::size_t k = 0;
    std::size_t defined_days = 0;
    std::size_t undefined_days = 0;
};

MetricsReport report(const Matrix& predictions, const Matrix& realized, std::size_t k,
                     IcirScaling scaling = IcirScaling::None);

}  // namespace rankbench
