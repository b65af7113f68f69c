#pragma once

#include "rankbench/losses.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankbench {

// Shape hyperparameters of the spatio-temporal encoder.
struct ModelConfig {
    std::size_t d_model = 16;
    std::size_t n_layers = 1;  // each layer = temporal block + spatial block
    std::size_t n_heads = 2;
    std::size_t d_ff = 32;
    double dropout = 0.0;
    std::size_t window = 20;  // T
    std::size_t features = 2;  // F

    std::size_t head_dim() const { return d_model / n_heads; }
    void validate() const;  // throws ConfigError
    bool operator==(const ModelConfig&) const = default;
};

// A named slice of the flat parameter vector. Matrices are [out, in].
struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Trainable parameters in a fixed order:
//   input.weight [D,F], input.bias [D]
//   layers.<l>.<temporal|spatial>.{norm1.gamma, norm1.beta [D],
//     attn.{wq,wk,wv,wo} [D,D], attn.{bq,bk,bv,bo} [D],
//     norm2.gamma, norm2.beta [D], ffn.w1 [d_ff,D], ffn.b1 [d_ff],
//     ffn.w2 [D,d_ff], ffn.b2 [D]}
//   aggregate.norm.gamma, aggregate.norm.beta [D], aggregate.{wk,wv} [D,D],
//   aggregate.{bk,bv} [D], aggregate.query [D] (one dh-slice per head)
//   decoder.weight [D], decoder.bias [1]
std::vector<ParamTensor> parameter_layout(const ModelConfig& config);
std::size_t parameter_count(const ModelConfig& config);

struct ModelParams {
    ModelConfig config;
    std::uint64_t seed = 0;
    std::vector<double> values;      // trainable, ordered as parameter_layout()
    std::vector<double> positional;  // fixed T x D sinusoidal table

    std::span<double> tensor(const std::string& name);
    std::span<const double> tensor(const std::string& name) const;
};

// pe[t, 2i] = sin(t / 10000^(2i/D)), pe[t, 2i+1] = cos(t / 10000^(2i/D)).
std::vector<double> sinusoidal_encoding(std::size_t window, std::size_t d_model);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, unit norm gains, zero
// norm offsets and decoder bias. Deterministic in `seed`.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardTrace {
    std::vector<double> predictions;  // N
};

// x is T x N x F (oldest day first). Dropout is off.
ForwardTrace forward(const ModelParams& params, std::span<const double> x, std::size_t stocks);

struct ParamGradients {
    double loss = 0.0;
    std::vector<double> predictions;
    std::vector<double> grads;  // same layout as ModelParams::values
};

// Loss of forward(x) against y and its gradient with respect to every
// trainable parameter. Dropout is applied only when `dropout_seed` is set and
// config.dropout > 0; without it the call is fully deterministic.
ParamGradients forward_backward(const ModelParams& params, std::span<const double> x, std::size_t stocks,
                                std::span<const double> y, const LossSpec& spec,
                                std::optional<std::uint64_t> dropout_seed = std::nullopt);

// Backpropagates an arbitrary prediction gradient dL/dyhat.
ParamGradients backward_from_predictions(const ModelParams& params, std::span<const double> x, std::size_t stocks,
                                         std::span<const double> dpred);

}  // namespace rankbench
