#include "rankbench/train.hpp"

#include "rankbench/error.hpp"
#include "rankbench/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

namespace rankbench {

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Plateau: return "plateau";
        case ScheduleKind::Cosine: return "cosine";
        case ScheduleKind::Constant: return "constant";
    }
    return "?";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    for (ScheduleKind k : {ScheduleKind::Plateau, ScheduleKind::Cosine, ScheduleKind::Constant})
        if (to_string(k) == name) return k;
    throw ConfigError("train.lr_schedule.kind: unknown schedule '" + std::string(name) +
                      "' (expected plateau, cosine or constant)");
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
    // Zero is accepted: a frozen model is a useful baseline and stagnation test.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be >= 0");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("train.weight_decay must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (early_stopping_patience < 1) throw ConfigError("train.early_stopping_patience must be >= 1");
    if (lr_schedule.kind == ScheduleKind::Plateau) {
        if (!(lr_schedule.factor > 0.0 && lr_schedule.factor < 1.0))
            throw ConfigError("train.lr_schedule.factor must lie in (0, 1)");
        if (lr_schedule.patience < 1) throw ConfigError("train.lr_schedule.patience must be >= 1");
    }
    if (!(lr_schedule.min_lr >= 0.0)) throw ConfigError("train.lr_schedule.min_lr must be >= 0");
}

AdamW::AdamW(std::size_t size, double weight_decay, double beta1, double beta2, double eps)
    : wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("AdamW size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    const double decay = 1.0 - lr * wd_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * grads[i];
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * grads[i] * grads[i];
        params[i] *= decay;
        const double mhat = m_[i] / c1;
        if (mhat == 0.0) continue;
        const double vhat = v_[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
}

double evaluate_loss(const ModelParams& params, std::span<const WindowSample> samples, const LossSpec& spec) {
    if (samples.empty()) throw std::invalid_argument("evaluate_loss needs at least one sample");
    double total = 0.0;
    for (const WindowSample& s : samples) {
        const ForwardTrace tr = forward(params, s.x, s.y.size());
        total += evaluate(tr.predictions, s.y, spec).value;
    }
    return total / static_cast<double>(samples.size());
}

Matrix predict(const ModelParams& params, std::span<const WindowSample> samples) {
    const std::size_t n = samples.empty() ? 0 : samples.front().y.size();
    Matrix out(samples.size(), n);
    for (std::size_t d = 0; d < samples.size(); ++d) {
        const ForwardTrace tr = forward(params, samples[d].x, samples[d].y.size());
        if (tr.predictions.size() != n) throw std::invalid_argument("samples disagree on stock count");
        std::copy(tr.predictions.begin(), tr.predictions.end(), out.row(d).begin());
    }
    return out;
}

TrainResult train(const ModelConfig& model, std::span<const WindowSample> train_samples,
                  std::span<const WindowSample> val_samples, const LossSpec& spec, const TrainConfig& tc) {
    model.validate();
    spec.validate();
    tc.validate();
    if (train_samples.empty() || val_samples.empty()) throw DataError("training and validation splits must be non-empty");

    TrainResult result;
    result.model = model;
    result.loss = spec;
    result.train = tc;

    ModelParams params = init_params(model, tc.seed);
    AdamW opt(params.values.size(), tc.weight_decay);
    std::vector<double> grad_sum(params.values.size());

    double lr = tc.learning_rate;
    double best_val = std::numeric_limits<double>::infinity();
    double plateau_best = best_val;
    std::size_t since_best = 0;
    std::size_t plateau_bad = 0;
    result.best_params = params;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffler(mix_seed(tc.seed, epoch));
        shuffler.shuffle(std::span<std::size_t>(order));

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t stop = std::min(order.size(), start + tc.batch_size);
            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t day = order[b];
                const WindowSample& s = train_samples[day];
                std::optional<std::uint64_t> dropout_seed;
                if (model.dropout > 0.0) dropout_seed = mix_seed(tc.seed, epoch, day + 1);
                const ParamGradients g = forward_backward(params, s.x, s.y.size(), s.y, spec, dropout_seed);
                if (!std::isfinite(g.loss))
                    throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + " on " +
                                        s.anchor_date + " (" + std::string(to_string(spec.kind)) + ", lr " +
                                        std::to_string(lr) + ")");
                epoch_loss += g.loss;
                for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += g.grads[i];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad_sum) g *= inv;
            opt.step(params.values, grad_sum, lr);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(order.size());
        rec.learning_rate = lr;
        rec.val_loss = evaluate_loss(params, val_samples, spec);
        if (!std::isfinite(rec.val_loss))
            throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
        result.history.push_back(rec);
        result.stopped_epoch = epoch;

        if (rec.val_loss < best_val) {
            best_val = rec.val_loss;
            result.best_params = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }

        switch (tc.lr_schedule.kind) {
            case ScheduleKind::Plateau:
                if (rec.val_loss < plateau_best) {
                    plateau_best = rec.val_loss;
                    plateau_bad = 0;
                } else if (++plateau_bad > tc.lr_schedule.patience) {
                    lr = std::max(tc.lr_schedule.min_lr, lr * tc.lr_schedule.factor);
                    plateau_bad = 0;
                }
                break;
            case ScheduleKind::Cosine: {
                const double progress = static_cast<double>(epoch) / static_cast<double>(tc.max_epochs);
                const double lo = std::min(tc.lr_schedule.min_lr, tc.learning_rate);
                lr = lo + 0.5 * (tc.learning_rate - lo) * (1.0 + std::cos(std::numbers::pi * progress));
                break;
            }
            case ScheduleKind::Constant: break;
        }

        if (since_best >= tc.early_stopping_patience) break;
    }
    result.best_val_loss = best_val;
    return result;
}

namespace {

template <class T>
std::size_t axis_len(const std::vector<T>& axis) {
    return axis.empty() ? 1 : axis.size();
}

}  // namespace

std::size_t GridSpec::size() const {
    return axis_len(dropout) * axis_len(d_model) * axis_len(d_ff) * axis_len(learning_rate) * axis_len(lambda) *
           axis_len(margin) * axis_len(scale) * axis_len(temperature);
}

void GridSpec::validate_for(LossKind kind, const ModelConfig& base) const {
    const std::string k(to_string(kind));
    if (!lambda.empty() && !is_pairwise(kind)) throw ConfigError("grid.lambda does not apply to loss " + k);
    if (!margin.empty() && !uses_margin(kind)) throw ConfigError("grid.margin does not apply to loss " + k);
    if (!scale.empty() && !uses_scale(kind)) throw ConfigError("grid.scale does not apply to loss " + k);
    if (!temperature.empty() && !uses_temperature(kind)) throw ConfigError("grid.temperature does not apply to loss " + k);
    for (double v : dropout)
        if (!(v >= 0.0 && v < 1.0)) throw ConfigError("grid.dropout values must lie in [0, 1)");
    for (auto v : d_model)
        if (v == 0 || v % base.n_heads != 0) throw ConfigError("grid.d_model values must be positive multiples of n_heads");
    for (auto v : d_ff)
        if (v == 0) throw ConfigError("grid.d_ff values must be positive");
    for (double v : learning_rate)
        if (!(v >= 0.0)) throw ConfigError("grid.learning_rate values must be >= 0");
    for (double v : lambda)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("grid.lambda values must lie in [0, 1]");
    for (double v : margin)
        if (!(v >= 0.0)) throw ConfigError("grid.margin values must be >= 0");
    for (double v : scale)
        if (!(v > 0.0)) throw ConfigError("grid.scale values must be > 0");
    for (double v : temperature)
        if (!(v > 0.0)) throw ConfigError("grid.temperature values must be > 0");
}

GridPoint grid_point(const GridSpec& grid, std::size_t index, const ModelConfig& model, const LossSpec& loss,
                     const TrainConfig& tc) {
    if (index >= grid.size()) throw std::out_of_range("grid index out of range");
    GridPoint p{index, model, loss, tc};
    std::size_t rem = index;
    auto take = [&rem](const auto& axis, auto& target) {
        if (axis.empty()) return;
        target = axis[rem % axis.size()];
        rem /= axis.size();
    };
    // Decoded last axis first so that the last axis varies fastest.
    take(grid.temperature, p.loss.temperature);
    take(grid.scale, p.loss.scale);
    take(grid.margin, p.loss.margin);
    take(grid.lambda, p.loss.lambda);
    take(grid.learning_rate, p.train.learning_rate);
    take(grid.d_ff, p.model.d_ff);
    take(grid.d_model, p.model.d_model);
    take(grid.dropout, p.model.dropout);
    return p;
}

GridResult grid_search(const GridSpec& grid, const ModelConfig& model, const LossSpec& loss, const TrainConfig& tc,
                       std::span<const WindowSample> train_samples, std::span<const WindowSample> val_samples,
                       std::size_t threads) {
    grid.validate_for(loss.kind, model);
    const std::size_t n = grid.size();
    std::vector<LeaderboardEntry> entries(n);
    std::vector<std::optional<TrainResult>> results(n);
    std::vector<std::exception_ptr> fatal(n);

    auto run_point = [&](std::size_t i) {
        LeaderboardEntry& e = entries[i];
        e.point = grid_point(grid, i, model, loss, tc);
        try {
            TrainResult r = train(e.point.model, train_samples, val_samples, e.point.loss, e.point.train);
            e.val_loss = r.best_val_loss;
            e.best_epoch = r.best_epoch;
            e.stopped_epoch = r.stopped_epoch;
            results[i] = std::move(r);
        } catch (const TrainingError& ex) {
            e.failed = true;
            e.error = ex.what();
        } catch (...) {
            fatal[i] = std::current_exception();
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run_point(i);
            });
    }

    for (const auto& ex : fatal)
        if (ex) std::rethrow_exception(ex);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entries[a].failed != entries[b].failed) return !entries[a].failed;
        if (entries[a].failed) return a < b;
        if (entries[a].val_loss != entries[b].val_loss) return entries[a].val_loss < entries[b].val_loss;
        return a < b;
    });
    if (entries[order.front()].failed) throw TrainingError("every grid point diverged; first error: " + entries[order.front()].error);

    GridResult out;
    out.best = entries[order.front()].point;
    out.best_result = std::move(*results[order.front()]);
    for (std::size_t i : order) out.leaderboard.push_back(entries[i]);
    return out;
}

}  // namespace rankbench
