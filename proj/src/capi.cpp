#include "rankbench/rankbench.h"

#include "rankbench/backtest.hpp"
#include "rankbench/checkpoint.hpp"
#include "rankbench/config.hpp"
#include "rankbench/error.hpp"
#include "rankbench/losses.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/pipeline.hpp"
#include "rankbench/synth.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

struct rb_config {
    rankbench::RunConfig cfg;
};

struct rb_model {
    rankbench::ModelParams params;
};

namespace {

using namespace rankbench;

thread_local std::string g_last_error;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

rb_status fail(rb_status s, const char* what) {
    g_last_error = what;
    return s;
}

template <class F>
rb_status guarded(F&& f) noexcept {
    try {
        g_last_error.clear();
        f();
        return RB_OK;
    } catch (const ConfigError& e) {
        return fail(RB_ERR_CONFIG, e.what());
    } catch (const IoError& e) {
        return fail(RB_ERR_IO, e.what());
    } catch (const DataError& e) {
        return fail(RB_ERR_DATA, e.what());
    } catch (const TrainingError& e) {
        return fail(RB_ERR_TRAINING, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(RB_ERR_IO, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(RB_ERR_CONFIG, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(RB_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(RB_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(RB_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RB_ERR_INTERNAL, "unknown error");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

void copy_out(const std::string& text, char* buf, std::size_t cap, std::size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (!buf) return;
    require(cap >= text.size() + 1, "output buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
}

LossSpec to_spec(const rb_loss_spec& s) {
    require(s.kind >= RB_LOSS_MSE && s.kind <= RB_LOSS_LISTNET, "unknown loss kind");
    LossSpec out;
    out.kind = kAllLossKinds[static_cast<int>(s.kind)];
    out.lambda = s.lambda;
    out.margin = s.margin;
    out.scale = s.scale;
    out.temperature = s.temperature;
    out.validate();
    return out;
}

BacktestConfig to_backtest(const rb_backtest_params& p) {
    BacktestConfig c;
    c.k = p.k;
    c.risk_free_rate = p.risk_free_rate;
    c.trading_days_per_year = p.trading_days_per_year;
    c.initial_value = p.initial_value;
    c.annualization = p.arithmetic_annualization ? Annualization::Arithmetic : Annualization::Geometric;
    c.validate();
    return c;
}

void to_c(const PortfolioMetrics& m, rb_portfolio_metrics* out) {
    out->cumulative_return = m.cumulative_return;
    out->annualized_return = m.annualized_return;
    out->annualized_volatility = m.annualized_volatility;
    out->sharpe_ratio = m.sharpe_ratio.value_or(kNaN);
    out->max_drawdown = m.max_drawdown;
}

std::filesystem::path out_or_default(const rb_config* c, const char* out_dir) {
    return out_dir ? std::filesystem::path(out_dir) : c->cfg.resolved_output_dir();
}

}  // namespace

extern "C" {

const char* rb_version(void) { return RANKBENCH_VERSION; }

const char* rb_status_name(rb_status status) {
    switch (status) {
        case RB_OK: return "ok";
        case RB_ERR_INVALID_ARGUMENT: return "invalid argument";
        case RB_ERR_CONFIG: return "configuration error";
        case RB_ERR_IO: return "i/o error";
        case RB_ERR_DATA: return "data error";
        case RB_ERR_TRAINING: return "training error";
        case RB_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* rb_last_error(void) { return g_last_error.c_str(); }

rb_status rb_config_load(const char* path, rb_config** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new rb_config{load_run_config(path)};
    });
}

rb_status rb_config_parse(const char* json_text, const char* base_dir, rb_config** out) {
    return guarded([&] {
        require(json_text && out, "null argument");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("invalid JSON: ") + e.what());
        }
        const std::filesystem::path base = base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path();
        *out = new rb_config{parse_run_config(j, base)};
    });
}

void rb_config_free(rb_config* config) { delete config; }

rb_status rb_config_set_seed(rb_config* config, uint64_t seed) {
    return guarded([&] {
        require(config, "null config");
        config->cfg.seed = seed;
        config->cfg.finalize();
    });
}

rb_status rb_config_set_deterministic(rb_config* config, int deterministic) {
    return guarded([&] {
        require(config, "null config");
        config->cfg.deterministic = deterministic != 0;
    });
}

rb_status rb_config_set_output_dir(rb_config* config, const char* dir) {
    return guarded([&] {
        require(config && dir && *dir, "null or empty output directory");
        config->cfg.output_dir = std::filesystem::absolute(dir).string();
    });
}

rb_status rb_config_output_dir(const rb_config* config, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(config, "null config");
        copy_out(config->cfg.resolved_output_dir().string(), buf, cap, needed);
    });
}

rb_status rb_config_to_json(const rb_config* config, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(config, "null config");
        copy_out(to_json(config->cfg).dump(2), buf, cap, needed);
    });
}

rb_status rb_run_ingest(const rb_config* config, const char* out_dir) {
    return guarded([&] {
        require(config, "null config");
        run_ingest(config->cfg, out_or_default(config, out_dir));
    });
}

rb_status rb_run_train(const rb_config* config, const char* out_dir) {
    return guarded([&] {
        require(config, "null config");
        run_train(config->cfg, out_or_default(config, out_dir));
    });
}

rb_status rb_run_gridsearch(const rb_config* config, const char* out_dir) {
    return guarded([&] {
        require(config, "null config");
        run_gridsearch(config->cfg, out_or_default(config, out_dir));
    });
}

rb_status rb_run_backtest(const rb_config* config, const char* checkpoint_path, const char* out_dir) {
    return guarded([&] {
        require(config && checkpoint_path, "null argument");
        run_backtest(config->cfg, checkpoint_path, out_or_default(config, out_dir));
    });
}

rb_status rb_run_compare(const char* const* run_dirs, size_t count, const char* out_dir, char* buf, size_t cap,
                         size_t* needed) {
    return guarded([&] {
        require(run_dirs || count == 0, "null run list");
        std::vector<std::filesystem::path> dirs;
        for (size_t i = 0; i < count; ++i) {
            require(run_dirs[i], "null run directory");
            dirs.emplace_back(run_dirs[i]);
        }
        const std::string text = run_compare(dirs, out_dir ? std::filesystem::path(out_dir) : std::filesystem::path{});
        copy_out(text, buf, cap, needed);
    });
}

void rb_synth_default_options(rb_synth_options* opt) {
    if (!opt) return;
    const SynthOptions d;
    opt->tickers = d.tickers;
    opt->days = d.days;
    opt->seed = d.seed;
    opt->signal = d.signal;
    opt->noise_ratio = d.noise_ratio;
}

rb_status rb_synth_write(const rb_synth_options* opt, const char* out_dir) {
    return guarded([&] {
        require(opt && out_dir, "null argument");
        SynthOptions o;
        o.tickers = opt->tickers;
        o.days = opt->days;
        o.seed = opt->seed;
        o.signal = opt->signal;
        o.noise_ratio = opt->noise_ratio;
        write_synthetic_bundle(o, out_dir);
    });
}

rb_status rb_loss_parse_kind(const char* name, rb_loss_kind* out) {
    return guarded([&] {
        require(name && out, "null argument");
        const LossKind k = parse_loss_kind(name);
        for (int i = 0; i < 8; ++i)
            if (kAllLossKinds[i] == k) *out = static_cast<rb_loss_kind>(i);
    });
}

void rb_loss_default_spec(rb_loss_kind kind, rb_loss_spec* out) {
    if (!out) return;
    const LossSpec d;
    out->kind = kind;
    out->lambda = d.lambda;
    out->margin = d.margin;
    out->scale = d.scale;
    out->temperature = d.temperature;
}

rb_status rb_loss_evaluate(const rb_loss_spec* spec, const double* yhat, const double* y, size_t n, double* value,
                           double* grad) {
    return guarded([&] {
        require(spec && yhat && y && value, "null argument");
        const LossOutput o = evaluate({yhat, n}, {y, n}, to_spec(*spec));
        *value = o.value;
        if (grad) std::copy(o.grad.begin(), o.grad.end(), grad);
    });
}

rb_status rb_spearman_ic(const double* yhat, const double* y, size_t n, double* out) {
    return guarded([&] {
        require(yhat && y && out, "null argument");
        *out = spearman_ic({yhat, n}, {y, n}).value_or(kNaN);
    });
}

rb_status rb_precision_at_k(const double* yhat, const double* y, size_t n, size_t k, double* out) {
    return guarded([&] {
        require(yhat && y && out, "null argument");
        *out = precision_at_k({yhat, n}, {y, n}, k);
    });
}

void rb_backtest_default_params(rb_backtest_params* out) {
    if (!out) return;
    const BacktestConfig d;
    out->k = d.k;
    out->risk_free_rate = d.risk_free_rate;
    out->trading_days_per_year = d.trading_days_per_year;
    out->initial_value = d.initial_value;
    out->arithmetic_annualization = 0;
}

rb_status rb_portfolio_metrics_compute(const double* daily_returns, size_t days, const rb_backtest_params* params,
                                       rb_portfolio_metrics* out) {
    return guarded([&] {
        require(daily_returns && params && out, "null argument");
        to_c(portfolio_metrics({daily_returns, days}, to_backtest(*params)), out);
    });
}

rb_status rb_backtest_run(const double* predictions, const double* realized, size_t days, size_t n,
                          const rb_backtest_params* params, double* daily_returns, size_t* holdings,
                          rb_portfolio_metrics* out) {
    return guarded([&] {
        require(predictions && realized && params && out, "null argument");
        Matrix p(days, n), r(days, n);
        std::copy(predictions, predictions + days * n, p.data.begin());
        std::copy(realized, realized + days * n, r.data.begin());
        const BacktestResult res = run_backtest(p, r, to_backtest(*params));
        if (daily_returns) std::copy(res.daily_returns.begin(), res.daily_returns.end(), daily_returns);
        if (holdings)
            for (size_t d = 0; d < days; ++d)
                std::copy(res.holdings[d].begin(), res.holdings[d].end(), holdings + d * params->k);
        to_c(res.metrics, out);
    });
}

rb_status rb_model_load(const char* checkpoint_path, rb_model** out) {
    return guarded([&] {
        require(checkpoint_path && out, "null argument");
        *out = new rb_model{load_checkpoint(checkpoint_path)};
    });
}

void rb_model_free(rb_model* model) { delete model; }

rb_status rb_model_shape(const rb_model* model, size_t* window, size_t* features, size_t* parameters) {
    return guarded([&] {
        require(model, "null model");
        if (window) *window = model->params.config.window;
        if (features) *features = model->params.config.features;
        if (parameters) *parameters = model->params.values.size();
    });
}

rb_status rb_model_predict(const rb_model* model, const double* x, size_t x_len, size_t stocks, double* out) {
    return guarded([&] {
        require(model && x && out, "null argument");
        const ForwardTrace tr = forward(model->params, {x, x_len}, stocks);
        std::copy(tr.predictions.begin(), tr.predictions.end(), out);
    });
}

}  // extern "C"
