#include "rankbench/pipeline.hpp"

#include "rankbench/checkpoint.hpp"
#include "rankbench/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rankbench {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed: " + p.string());
}

void write_json(const std::filesystem::path& p, const ordered_json& j) { write_file(p, j.dump(2) + "\n"); }

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string shortest(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, r.ptr};
}

ordered_json data_checksums(const RunConfig& cfg) {
    ordered_json j = ordered_json::object();
    const auto dir = cfg.resolved_data_directory();
    for (const auto& t : cfg.tickers) j[t] = hex64(fnv1a64(read_file(dir / (t + ".csv"))));
    return j;
}

// Merges the command's entry into <out>/manifest.json.
void write_manifest(const RunConfig& cfg, const std::filesystem::path& out_dir, const std::string& command,
                    ordered_json details) {
    const auto path = out_dir / kManifestFile;
    ordered_json m;
    if (std::filesystem::exists(path)) {
        try {
            m = ordered_json::parse(read_file(path));
        } catch (const json::exception&) {
            m = ordered_json::object();
        }
    }
    const ordered_json config = to_json(cfg);
    m["tool"] = "rankbench";
    m["version"] = RANKBENCH_VERSION;
    m["config"] = config;
    m["config_hash"] = hex64(fnv1a64(config.dump()));
    m["seed"] = cfg.seed;
    m["deterministic"] = cfg.deterministic;
    m["data_directory"] = cfg.resolved_data_directory().string();
    m["data_checksums"] = data_checksums(cfg);
    if (!m.contains("commands") || !m["commands"].is_object()) m["commands"] = ordered_json::object();
    m["commands"][command] = std::move(details);
    write_json(path, m);
}

ordered_json split_json(const SplitPlan& s) {
    return {{"window", s.window},
            {"train", {s.train.begin, s.train.end}},
            {"val", {s.val.begin, s.val.end}},
            {"test", {s.test.begin, s.test.end}}};
}

void require_splits(const PreparedData& d) {
    if (d.split.val.size() == 0 || d.split.test.size() == 0)
        throw DataError("not enough samples for non-empty train/val/test splits (" + std::to_string(d.samples.size()) +
                        " samples)");
}

const json& field(const json& j, const char* key, const std::filesystem::path& file) {
    if (!j.contains(key)) throw IoError(file.string() + " is missing '" + key + "'");
    return j.at(key);
}

std::optional<double> number_or_null(const json& j, const char* key, const std::filesystem::path& file) {
    const json& v = field(j, key, file);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw IoError(file.string() + ": '" + key + "' is not a number");
    return v.get<double>();
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
    return prepare_data(cfg, ingest_csv(cfg.resolved_data_directory(), cfg.tickers));
}

PreparedData prepare_data(const RunConfig& cfg, MarketDataset dataset) {
    PreparedData d;
    d.dataset = std::move(dataset);
    if (d.dataset.days() < 2) throw DataError("dataset needs at least 2 aligned days");
    const std::size_t n = sample_count(d.dataset.days() - 1, cfg.window);
    if (n == 0)
        throw DataError("insufficient history: " + std::to_string(d.dataset.days()) + " aligned days for window " +
                        std::to_string(cfg.window));
    d.split = plan_split(n, cfg.window, cfg.train_fraction, cfg.val_fraction);
    d.panel = build_features(d.dataset, d.split);
    d.samples = make_windows(d.panel, d.dataset, cfg.window);
    return d;
}

ordered_json train_result_to_json(const TrainResult& r) {
    ordered_json j;
    j["loss"] = loss_spec_to_json(r.loss);
    j["model"] = model_config_to_json(r.model);
    j["train"] = train_config_to_json(r.train);
    j["seed"] = r.train.seed;
    j["best_epoch"] = r.best_epoch;
    j["stopped_epoch"] = r.stopped_epoch;
    j["best_val_loss"] = r.best_val_loss;
    ordered_json hist = ordered_json::array();
    for (const auto& e : r.history)
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"learning_rate", e.learning_rate}});
    j["history"] = hist;
    return j;
}

ordered_json leaderboard_to_json(const GridResult& g) {
    ordered_json j;
    j["best_index"] = g.best.index;
    ordered_json rows = ordered_json::array();
    std::size_t rank = 0;
    for (const auto& e : g.leaderboard) {
        ordered_json row;
        row["rank"] = e.failed ? ordered_json(nullptr) : ordered_json(++rank);
        row["index"] = e.point.index;
        row["loss"] = loss_spec_to_json(e.point.loss);
        row["model"] = model_config_to_json(e.point.model);
        row["learning_rate"] = e.point.train.learning_rate;
        row["failed"] = e.failed;
        if (e.failed) {
            row["error"] = e.error;
            row["val_loss"] = nullptr;
        } else {
            row["val_loss"] = e.val_loss;
            row["best_epoch"] = e.best_epoch;
            row["stopped_epoch"] = e.stopped_epoch;
        }
        rows.push_back(row);
    }
    j["entries"] = rows;
    return j;
}

ordered_json portfolio_metrics_to_json(const PortfolioMetrics& m, const RunConfig& cfg, std::size_t days) {
    ordered_json j;
    j["loss"] = std::string(to_string(cfg.loss.kind));
    j["days"] = days;
    j["k"] = cfg.backtest.k;
    j["risk_free_rate"] = cfg.backtest.risk_free_rate;
    j["trading_days_per_year"] = cfg.backtest.trading_days_per_year;
    j["annualization"] = std::string(to_string(cfg.backtest.annualization));
    j["cumulative_return"] = m.cumulative_return;
    j["annualized_return"] = m.annualized_return;
    j["annualized_volatility"] = m.annualized_volatility;
    j["sharpe_ratio"] = optional_json(m.sharpe_ratio);
    j["max_drawdown"] = m.max_drawdown;
    return j;
}

ordered_json predictive_metrics_to_json(const MetricsReport& m, const RunConfig& cfg) {
    ordered_json j;
    j["loss"] = std::string(to_string(cfg.loss.kind));
    j["days"] = m.ic_series.size();
    j["k"] = m.k;
    j["ic_mean"] = optional_json(m.ic_mean);
    j["ic_std"] = optional_json(m.ic_std);
    j["icir"] = optional_json(m.icir);
    j["icir_scaling"] = std::string(to_string(cfg.icir_scaling));
    j["precision_at_k"] = m.precision_at_k;
    j["test_mse"] = m.test_mse;
    j["defined_ic_days"] = m.defined_days;
    j["undefined_ic_days"] = m.undefined_days;
    return j;
}

void run_ingest(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const PreparedData d = prepare_data(cfg);
    ordered_json j;
    j["tickers"] = d.dataset.tickers;
    j["days"] = d.dataset.days();
    j["first_date"] = d.dataset.dates.front();
    j["last_date"] = d.dataset.dates.back();
    j["feature_days"] = d.panel.days;
    j["samples"] = d.samples.size();
    j["split"] = split_json(d.split);
    j["warnings"] = d.panel.warnings;
    j["data_checksums"] = data_checksums(cfg);
    write_json(out_dir / kDatasetSummaryFile, j);
    write_manifest(cfg, out_dir, "ingest", {{"outputs", {kDatasetSummaryFile}}});
}

void run_train(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const PreparedData d = prepare_data(cfg);
    require_splits(d);
    const TrainResult r = train(cfg.model, d.train(), d.val(), cfg.loss, cfg.train);
    std::filesystem::create_directories(out_dir);
    save_checkpoint(r.best_params, out_dir / kCheckpointFile);
    write_json(out_dir / kTrainResultFile, train_result_to_json(r));
    write_manifest(cfg, out_dir, "train",
                   {{"split", split_json(d.split)},
                    {"outputs", {kCheckpointFile, kTrainResultFile}},
                    {"checkpoint_checksum", hex64(fnv1a64(read_file(out_dir / kCheckpointFile)))}});
}

void run_gridsearch(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    if (!cfg.grid) throw ConfigError("gridsearch requires a 'grid' section in the config");
    const PreparedData d = prepare_data(cfg);
    require_splits(d);
    const std::size_t threads = cfg.deterministic ? 1 : 0;
    const GridResult g = grid_search(*cfg.grid, cfg.model, cfg.loss, cfg.train, d.train(), d.val(), threads);
    std::filesystem::create_directories(out_dir);
    save_checkpoint(g.best_result.best_params, out_dir / kCheckpointFile);
    write_json(out_dir / kTrainResultFile, train_result_to_json(g.best_result));
    write_json(out_dir / kLeaderboardFile, leaderboard_to_json(g));
    write_manifest(cfg, out_dir, "gridsearch",
                   {{"split", split_json(d.split)},
                    {"grid_points", cfg.grid->size()},
                    {"best_index", g.best.index},
                    {"best_loss", loss_spec_to_json(g.best.loss)},
                    {"best_model", model_config_to_json(g.best.model)},
                    {"best_learning_rate", g.best.train.learning_rate},
                    {"outputs", {kCheckpointFile, kTrainResultFile, kLeaderboardFile}}});
}

void run_backtest(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir) {
    cfg.backtest.validate_for(cfg.tickers.size());
    const ModelParams params = load_checkpoint(checkpoint);
    if (params.config.window != cfg.window || params.config.features != kFeatureChannels)
        throw DataError("checkpoint " + checkpoint.string() + " expects window " + std::to_string(params.config.window) +
                        " x " + std::to_string(params.config.features) + " features, config has window " +
                        std::to_string(cfg.window));
    const PreparedData d = prepare_data(cfg);
    require_splits(d);
    const auto test = d.test();
    const Matrix pred = predict(params, test);
    Matrix realized(test.size(), d.dataset.stocks());
    for (std::size_t i = 0; i < test.size(); ++i)
        std::copy(test[i].y.begin(), test[i].y.end(), realized.row(i).begin());

    const BacktestResult bt = run_backtest(pred, realized, cfg.backtest);
    const MetricsReport rep = report(pred, realized, cfg.backtest.k, cfg.icir_scaling);

    std::filesystem::create_directories(out_dir);
    std::ostringstream eq;
    eq << "date,value,daily_return,holdings\n";
    std::ostringstream ic;
    ic << "date,ic\n";
    for (std::size_t i = 0; i < test.size(); ++i) {
        const std::string& date = d.target_date(d.split.test.begin + i);
        eq << date << ',' << shortest(bt.equity_curve[i + 1]) << ',' << shortest(bt.daily_returns[i]) << ',';
        for (std::size_t h = 0; h < bt.holdings[i].size(); ++h)
            eq << (h ? ";" : "") << d.dataset.tickers[bt.holdings[i][h]];
        eq << '\n';
        ic << date << ',' << (rep.ic_series[i] ? shortest(*rep.ic_series[i]) : "") << '\n';
    }
    write_file(out_dir / kEquityCurveFile, eq.str());
    write_file(out_dir / kIcSeriesFile, ic.str());
    write_json(out_dir / kPortfolioMetricsFile, portfolio_metrics_to_json(bt.metrics, cfg, test.size()));
    write_json(out_dir / kPredictiveMetricsFile, predictive_metrics_to_json(rep, cfg));
    write_manifest(cfg, out_dir, "backtest",
                   {{"checkpoint", std::filesystem::absolute(checkpoint).string()},
                    {"checkpoint_checksum", hex64(fnv1a64(read_file(checkpoint)))},
                    {"test_range", {d.split.test.begin, d.split.test.end}},
                    {"outputs", {kEquityCurveFile, kIcSeriesFile, kPortfolioMetricsFile, kPredictiveMetricsFile}}});
}

std::string run_compare(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_dir) {
    if (run_dirs.empty()) throw ConfigError("compare needs at least one run directory");
    struct Row {
        std::string label;
        std::optional<double> cr, ar, av, sr, mdd, ic, ic_std, icir, pk, mse;
        std::size_t k = 0;
    };
    std::vector<Row> rows;
    for (const auto& dir : run_dirs) {
        const auto pf = dir / kPortfolioMetricsFile;
        const auto qf = dir / kPredictiveMetricsFile;
        if (!std::filesystem::exists(pf)) throw IoError("run " + dir.string() + " has no " + kPortfolioMetricsFile);
        if (!std::filesystem::exists(qf)) throw IoError("run " + dir.string() + " has no " + kPredictiveMetricsFile);
        json p, q;
        try {
            p = json::parse(read_file(pf));
            q = json::parse(read_file(qf));
        } catch (const json::exception& e) {
            throw IoError("run " + dir.string() + ": unreadable metrics: " + e.what());
        }
        Row r;
        r.label = field(p, "loss", pf).get<std::string>();
        r.cr = number_or_null(p, "cumulative_return", pf);
        r.ar = number_or_null(p, "annualized_return", pf);
        r.av = number_or_null(p, "annualized_volatility", pf);
        r.sr = number_or_null(p, "sharpe_ratio", pf);
        r.mdd = number_or_null(p, "max_drawdown", pf);
        r.ic = number_or_null(q, "ic_mean", qf);
        r.ic_std = number_or_null(q, "ic_std", qf);
        r.icir = number_or_null(q, "icir", qf);
        r.pk = number_or_null(q, "precision_at_k", qf);
        r.mse = number_or_null(q, "test_mse", qf);
        r.k = field(q, "k", qf).get<std::size_t>();
        rows.push_back(r);
    }
    // Disambiguate repeated loss names with the run directory.
    std::vector<bool> dup(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        dup[i] = std::count_if(rows.begin(), rows.end(), [&](const Row& r) { return r.label == rows[i].label; }) > 1;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (dup[i]) rows[i].label += " (" + run_dirs[i].filename().string() + ")";

    const std::string pk_name = "P@" + std::to_string(rows.front().k);
    const std::vector<std::string> headers = {"Loss Function", "CR(%)",        "AR(%)",      "AV(%)", "SR",
                                              "MDD(%)",        "IC(Sp.)",      "Std IC(Sp.)", "ICIR(Sp.)", pk_name,
                                              "TestLoss(MSE)"};
    const std::vector<std::string> csv_headers = {"loss", "cr", "ar", "av", "sr", "mdd", "ic_mean", "ic_std",
                                                  "icir", "precision_at_k", "test_mse"};

    auto fmt = [](const std::optional<double>& v, int decimals, double mult) -> std::string {
        if (!v) return "n/a";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*f", decimals, *v * mult);
        return buf;
    };
    std::vector<std::vector<std::string>> table;
    std::ostringstream csv;
    for (std::size_t c = 0; c < csv_headers.size(); ++c) csv << (c ? "," : "") << csv_headers[c];
    csv << '\n';
    for (const Row& r : rows) {
        table.push_back({r.label, fmt(r.cr, 2, 100), fmt(r.ar, 2, 100), fmt(r.av, 2, 100), fmt(r.sr, 4, 1),
                         fmt(r.mdd, 2, 100), fmt(r.ic, 4, 1), fmt(r.ic_std, 4, 1), fmt(r.icir, 4, 1), fmt(r.pk, 4, 1),
                         fmt(r.mse, 5, 1)});
        csv << r.label;
        for (const auto& v : {r.cr, r.ar, r.av, r.sr, r.mdd, r.ic, r.ic_std, r.icir, r.pk, r.mse})
            csv << ',' << (v ? shortest(*v) : "");
        csv << '\n';
    }

    std::vector<std::size_t> width(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        width[c] = headers[c].size();
        for (const auto& row : table) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream txt;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) txt << "  ";
            const std::string pad(width[c] - cells[c].size(), ' ');
            txt << (c == 0 ? cells[c] + pad : pad + cells[c]);
        }
        txt << '\n';
    };
    emit(headers);
    std::size_t total = 0;
    for (auto w : width) total += w;
    txt << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& row : table) emit(row);

    if (!out_dir.empty()) {
        write_file(out_dir / kComparisonCsvFile, csv.str());
        write_file(out_dir / kComparisonTextFile, txt.str());
    }
    return txt.str();
}

}  // namespace rankbench
