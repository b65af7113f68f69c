#include "rankbench/data.hpp"

#include "rankbench/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

namespace rankbench {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

struct TickerRow {
    double close;
    double volume;
};

std::map<std::string, TickerRow> read_ticker_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("missing ticker file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    std::string_view header = trim(line);
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    if (header != "date,close,volume")
        throw DataError(path.string() + ": expected header 'date,close,volume'");

    std::map<std::string, TickerRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto c1 = view.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
        if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        const std::string date(trim(view.substr(0, c1)));
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (!is_iso_date(date)) throw DataError(where + ": unparseable date '" + date + "'");
        TickerRow row{};
        if (!parse_double(view.substr(c1 + 1, c2 - c1 - 1), row.close))
            throw DataError(where + ": unparseable close");
        if (!parse_double(view.substr(c2 + 1), row.volume))
            throw DataError(where + ": unparseable volume");
        if (row.close <= 0.0) throw DataError(where + ": non-positive price");
        if (row.volume < 0.0) throw DataError(where + ": negative volume");
        if (!rows.emplace(date, row).second) throw DataError(where + ": duplicate date " + date);
    }
    return rows;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    auto digits = [&](std::size_t from, std::size_t n, int& out) {
        const auto res = std::from_chars(s.data() + from, s.data() + from + n, out);
        return res.ec == std::errc{} && res.ptr == s.data() + from + n;
    };
    int y = 0, m = 0, d = 0;
    if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return false;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    return ymd.ok();
}

void MarketDataset::validate() const {
    const std::size_t n = stocks();
    if (n == 0) throw DataError("dataset has no tickers");
    if (close.rows != days() || close.cols != n || volume.rows != days() || volume.cols != n)
        throw DataError("close/volume matrices do not match dates x tickers");
    for (std::size_t d = 0; d < days(); ++d) {
        if (!is_iso_date(dates[d])) throw DataError("unparseable date '" + dates[d] + "'");
        if (d > 0 && !(dates[d - 1] < dates[d])) throw DataError("dates not strictly increasing at " + dates[d]);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(close(d, i) > 0.0) || !std::isfinite(close(d, i)))
                throw DataError("non-positive price for " + tickers[i] + " on " + dates[d]);
            if (!(volume(d, i) >= 0.0) || !std::isfinite(volume(d, i)))
                throw DataError("negative volume for " + tickers[i] + " on " + dates[d]);
        }
    }
}

MarketDataset ingest_csv(const std::filesystem::path& directory, std::span<const std::string> tickers) {
    if (tickers.empty()) throw DataError("ticker list is empty");
    if (!std::filesystem::is_directory(directory))
        throw IoError("data directory not found: " + directory.string());

    std::vector<std::map<std::string, TickerRow>> files;
    files.reserve(tickers.size());
    for (const auto& t : tickers) files.push_back(read_ticker_file(directory / (t + ".csv")));

    std::vector<std::string> common;
    for (const auto& [date, row] : files.front()) {
        const bool everywhere = std::all_of(files.begin() + 1, files.end(),
                                            [&](const auto& f) { return f.contains(date); });
        if (everywhere) common.push_back(date);
    }
    if (common.empty()) throw DataError("empty date intersection across tickers");

    MarketDataset ds;
    ds.tickers.assign(tickers.begin(), tickers.end());
    ds.dates = common;
    ds.close = Matrix(common.size(), tickers.size());
    ds.volume = Matrix(common.size(), tickers.size());
    for (std::size_t d = 0; d < common.size(); ++d) {
        for (std::size_t i = 0; i < files.size(); ++i) {
            const TickerRow& r = files[i].at(common[d]);
            ds.close(d, i) = r.close;
            ds.volume(d, i) = r.volume;
        }
    }
    ds.validate();
    return ds;
}

void write_csv(const MarketDataset& ds, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    for (std::size_t i = 0; i < ds.stocks(); ++i) {
        const auto path = directory / (ds.tickers[i] + ".csv");
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        out << "date,close,volume\n";
        for (std::size_t d = 0; d < ds.days(); ++d)
            out << ds.dates[d] << ',' << format_double(ds.close(d, i)) << ',' << format_double(ds.volume(d, i)) << '\n';
        if (!out) throw IoError("write failed: " + path.string());
    }
}

std::size_t sample_count(std::size_t panel_days, std::size_t window) {
    return panel_days > window ? panel_days - window : 0;
}

SplitPlan plan_split(std::size_t n_samples, std::size_t window, double train_frac, double val_frac) {
    if (window == 0) throw ConfigError("window length must be positive");
    if (!(train_frac > 0.0) || !(val_frac >= 0.0) || train_frac + val_frac > 1.0)
        throw ConfigError("split proportions must satisfy train > 0, val >= 0, train + val <= 1");
    SplitPlan plan;
    plan.window = window;
    const auto train_end = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n_samples)));
    const auto val_end = static_cast<std::size_t>(std::floor((train_frac + val_frac) * static_cast<double>(n_samples)));
    plan.train = {0, train_end};
    plan.val = {train_end, std::max(train_end, val_end)};
    plan.test = {plan.val.end, n_samples};
    if (plan.train.size() == 0) throw DataError("split leaves no training samples");
    return plan;
}

Scaler fit_scaler(std::span<const double> values) {
    Scaler s;
    if (values.empty()) return s;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    s.mean = mean;
    s.std = std::sqrt(var);
    if (!(s.std > 0.0)) {
        s.std = 1.0;
        s.degenerate = true;
    }
    return s;
}

std::vector<double> FeaturePanel::denormalize() const {
    std::vector<double> out(normalized.size());
    for (std::size_t d = 0; d < days; ++d)
        for (std::size_t i = 0; i < stocks; ++i)
            for (std::size_t c = 0; c < kFeatureChannels; ++c) {
                const std::size_t k = index(d, i, c);
                out[k] = scaler(i, c).invert(normalized[k]);
            }
    return out;
}

FeaturePanel build_features(const MarketDataset& ds, const SplitPlan& split) {
    if (ds.days() < 2) throw DataError("need at least 2 days to compute returns");
    FeaturePanel p;
    p.days = ds.days() - 1;
    p.stocks = ds.stocks();
    p.dates.assign(ds.dates.begin() + 1, ds.dates.end());
    if (split.window == 0 || split.samples() + split.window > p.days || split.train.size() == 0)
        throw DataError("split ranges exceed available days (" + std::to_string(split.samples()) + " samples, window " +
                        std::to_string(split.window) + ", " + std::to_string(p.days) + " feature days)");

    p.raw.resize(p.days * p.stocks * kFeatureChannels);
    for (std::size_t d = 0; d < p.days; ++d) {
        for (std::size_t i = 0; i < p.stocks; ++i) {
            const double prev = ds.close(d, i);
            const double cur = ds.close(d + 1, i);
            p.raw[p.index(d, i, kReturnChannel)] = (cur - prev) / prev;
            p.raw[p.index(d, i, kTurnoverChannel)] = ds.volume(d + 1, i) / cur;
        }
    }

    const std::size_t fit_rows = split.train_feature_rows();
    p.scalers.resize(p.stocks * kFeatureChannels);
    std::vector<double> column(fit_rows);
    for (std::size_t i = 0; i < p.stocks; ++i) {
        for (std::size_t c = 0; c < kFeatureChannels; ++c) {
            for (std::size_t d = 0; d < fit_rows; ++d) column[d] = p.raw[p.index(d, i, c)];
            Scaler s = fit_scaler(column);
            if (s.degenerate)
                p.warnings.push_back("zero variance for " + ds.tickers[i] + (c == kReturnChannel ? " return" : " turnover") +
                                     " on training rows; using std = 1");
            p.scalers[i * kFeatureChannels + c] = s;
        }
    }

    p.normalized.resize(p.raw.size());
    for (std::size_t d = 0; d < p.days; ++d)
        for (std::size_t i = 0; i < p.stocks; ++i)
            for (std::size_t c = 0; c < kFeatureChannels; ++c) {
                const std::size_t k = p.index(d, i, c);
                p.normalized[k] = p.scaler(i, c).apply(p.raw[k]);
            }
    return p;
}

std::vector<WindowSample> make_windows(const FeaturePanel& panel, const MarketDataset& ds, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window length T must be positive");
    if (panel.days <= window)
        throw DataError("insufficient history: " + std::to_string(panel.days) + " feature days for window " +
                        std::to_string(window));
    if (ds.days() != panel.days + 1 || ds.stocks() != panel.stocks)
        throw std::invalid_argument("feature panel does not belong to dataset");

    const std::size_t n = panel.stocks;
    const std::size_t row_width = n * kFeatureChannels;
    std::vector<WindowSample> out;
    out.reserve(panel.days - window);
    for (std::size_t a = window - 1; a + 1 < panel.days; ++a) {
        WindowSample s;
        s.anchor_row = a;
        s.anchor_date = panel.dates[a];
        const std::size_t first = a + 1 - window;
        s.x.assign(panel.normalized.begin() + static_cast<std::ptrdiff_t>(first * row_width),
                   panel.normalized.begin() + static_cast<std::ptrdiff_t>((a + 1) * row_width));
        // Panel row a is dataset row a + 1; the target day is dataset row a + 2.
        s.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double p0 = ds.close(a + 1, i);
            s.y[i] = (ds.close(a + 2, i) - p0) / p0;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace rankbench
