/* C interface to rankbench. All functions are safe to call from C; none
 * throw. On failure they return a non-zero rb_status and record a message
 * retrievable with rb_last_error() on the calling thread.
 *
 * String outputs follow one convention: the text plus a terminating NUL is
 * copied into `buf` when `cap` is large enough, and `*needed` (if non-null)
 * always receives the required capacity. A too-small buffer yields
 * RB_ERR_INVALID_ARGUMENT. */
#ifndef RANKBENCH_H
#define RANKBENCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(RANKBENCH_BUILDING_LIBRARY)
#define RB_API __attribute__((visibility("default")))
#else
#define RB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rb_status {
    RB_OK = 0,
    RB_ERR_INVALID_ARGUMENT = 1, /* null pointer, shape mismatch, small buffer */
    RB_ERR_CONFIG = 2,           /* malformed or out-of-range configuration */
    RB_ERR_IO = 3,               /* missing or unreadable file or directory */
    RB_ERR_DATA = 4,             /* input data violates a dataset invariant */
    RB_ERR_TRAINING = 5,         /* optimisation diverged */
    RB_ERR_INTERNAL = 6
} rb_status;

RB_API const char *rb_version(void);
RB_API const char *rb_status_name(rb_status status);
/* Message for the most recent failure on this thread; "" if none. */
RB_API const char *rb_last_error(void);

/* ---- run configuration ------------------------------------------------ */

typedef struct rb_config rb_config;

RB_API rb_status rb_config_load(const char *path, rb_config **out);
/* `base_dir` anchors relative paths; null means the working directory. */
RB_API rb_status rb_config_parse(const char *json_text, const char *base_dir, rb_config **out);
RB_API void rb_config_free(rb_config *config);
RB_API rb_status rb_config_set_seed(rb_config *config, uint64_t seed);
RB_API rb_status rb_config_set_deterministic(rb_config *config, int deterministic);
RB_API rb_status rb_config_set_output_dir(rb_config *config, const char *dir);
/* Resolved output directory (absolute or relative to the config file). */
RB_API rb_status rb_config_output_dir(const rb_config *config, char *buf, size_t cap, size_t *needed);
/* Canonical JSON; parsing it again yields an identical config. */
RB_API rb_status rb_config_to_json(const rb_config *config, char *buf, size_t cap, size_t *needed);

/* ---- pipeline commands ------------------------------------------------ */
/* `out_dir` may be null to use the config's output directory. */

RB_API rb_status rb_run_ingest(const rb_config *config, const char *out_dir);
RB_API rb_status rb_run_train(const rb_config *config, const char *out_dir);
RB_API rb_status rb_run_gridsearch(const rb_config *config, const char *out_dir);
RB_API rb_status rb_run_backtest(const rb_config *config, const char *checkpoint_path, const char *out_dir);
/* Consolidated metric table over completed runs. `out_dir` may be null to
 * skip writing files; the aligned text table is returned through `buf`
 * (which may be null when only files are wanted). */
RB_API rb_status rb_run_compare(const char *const *run_dirs, size_t count, const char *out_dir, char *buf, size_t cap,
                                size_t *needed);

typedef struct rb_synth_options {
    size_t tickers;
    size_t days;
    uint64_t seed;
    double signal;
    double noise_ratio;
} rb_synth_options;

RB_API void rb_synth_default_options(rb_synth_options *opt);
/* Writes <out_dir>/data/<TICKER>.csv and <out_dir>/config.json. */
RB_API rb_status rb_synth_write(const rb_synth_options *opt, const char *out_dir);

/* ---- numeric primitives ----------------------------------------------- */

typedef enum rb_loss_kind {
    RB_LOSS_MSE = 0,
    RB_LOSS_HINGE = 1,
    RB_LOSS_MARGIN = 2,
    RB_LOSS_BPR = 3,
    RB_LOSS_RANKNET = 4,
    RB_LOSS_WHR1 = 5,
    RB_LOSS_WHR2 = 6,
    RB_LOSS_LISTNET = 7
} rb_loss_kind;

typedef struct rb_loss_spec {
    rb_loss_kind kind;
    double lambda;
    double margin;
    double scale;
    double temperature;
} rb_loss_spec;

RB_API rb_status rb_loss_parse_kind(const char *name, rb_loss_kind *out);
RB_API void rb_loss_default_spec(rb_loss_kind kind, rb_loss_spec *out);
/* `grad` (length n) may be null. */
RB_API rb_status rb_loss_evaluate(const rb_loss_spec *spec, const double *yhat, const double *y, size_t n,
                                  double *value, double *grad);

/* NaN when either side is constant. */
RB_API rb_status rb_spearman_ic(const double *yhat, const double *y, size_t n, double *out);
RB_API rb_status rb_precision_at_k(const double *yhat, const double *y, size_t n, size_t k, double *out);

typedef struct rb_backtest_params {
    size_t k;
    double risk_free_rate;
    size_t trading_days_per_year;
    double initial_value;
    int arithmetic_annualization; /* 0: geometric from CR, 1: mean * days/year */
} rb_backtest_params;

typedef struct rb_portfolio_metrics {
    double cumulative_return;
    double annualized_return;
    double annualized_volatility;
    double sharpe_ratio; /* NaN when volatility is zero */
    double max_drawdown;
} rb_portfolio_metrics;

RB_API void rb_backtest_default_params(rb_backtest_params *out);
RB_API rb_status rb_portfolio_metrics_compute(const double *daily_returns, size_t days, const rb_backtest_params *params,
                                              rb_portfolio_metrics *out);
/* predictions and realized are days x n row-major. daily_returns (days) and
 * holdings (days x k) may be null. */
RB_API rb_status rb_backtest_run(const double *predictions, const double *realized, size_t days, size_t n,
                                 const rb_backtest_params *params, double *daily_returns, size_t *holdings,
                                 rb_portfolio_metrics *out);

/* ---- trained models --------------------------------------------------- */

typedef struct rb_model rb_model;

RB_API rb_status rb_model_load(const char *checkpoint_path, rb_model **out);
RB_API void rb_model_free(rb_model *model);
RB_API rb_status rb_model_shape(const rb_model *model, size_t *window, size_t *features, size_t *parameters);
/* x is window x stocks x features, oldest day first; out has `stocks` slots. */
RB_API rb_status rb_model_predict(const rb_model *model, const double *x, size_t x_len, size_t stocks, double *out);

#ifdef __cplusplus
}
#endif

#endif /* RANKBENCH_H */
