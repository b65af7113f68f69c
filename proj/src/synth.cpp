#include "rankbench/synth.hpp"

#include "rankbench/error.hpp"
#include "rankbench/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rankbench {
namespace {

std::vector<std::string> business_days(const std::string& start, std::size_t count) {
    if (!is_iso_date(start)) throw ConfigError("synthetic start date must be YYYY-MM-DD, got '" + start + "'");
    using namespace std::chrono;
    const int y = std::stoi(start.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
    sys_days day{year_month_day{year{y}, month{m}, std::chrono::day{d}}};
    std::vector<std::string> out;
    while (out.size() < count) {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day ymd{day};
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
            out.emplace_back(buf);
        }
        day += days{1};
    }
    return out;
}

}  // namespace

MarketDataset generate_synthetic(const SynthOptions& opt) {
    if (opt.tickers == 0 || opt.days < 2) throw ConfigError("synthetic market needs >= 1 ticker and >= 2 days");
    if (!(opt.signal > 0.0) || !(opt.noise_ratio >= 0.0)) throw ConfigError("synthetic signal must be > 0, noise >= 0");

    MarketDataset ds;
    for (std::size_t i = 0; i < opt.tickers; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "S%03zu", i);
        ds.tickers.emplace_back(buf);
    }
    ds.dates = business_days(opt.start_date, opt.days);
    ds.close = Matrix(opt.days, opt.tickers);
    ds.volume = Matrix(opt.days, opt.tickers);

    Rng rng(opt.seed);
    for (std::size_t i = 0; i < opt.tickers; ++i) {
        const double base = std::exp(rng.uniform(std::log(1e3), std::log(1e5)));
        double price = rng.uniform(20.0, 200.0);
        for (std::size_t d = 0; d < opt.days; ++d) {
            const double u = std::clamp(rng.normal(), -3.0, 3.0);
            ds.close(d, i) = price;
            ds.volume(d, i) = base * (1.0 + 0.3 * u) * price;
            const double r = opt.signal * u + opt.noise_ratio * opt.signal * rng.normal();
            price *= 1.0 + r;
        }
    }
    ds.validate();
    return ds;
}

RunConfig synthetic_run_config(const MarketDataset& ds, std::string data_directory) {
    RunConfig c;
    c.data_directory = std::move(data_directory);
    c.tickers = ds.tickers;
    c.window = 10;
    c.model.d_model = 16;
    c.model.n_layers = 1;
    c.model.n_heads = 2;
    c.model.d_ff = 32;
    c.train.max_epochs = 20;
    c.train.learning_rate = 2e-3;
    c.train.batch_size = 4;
    c.train.early_stopping_patience = 5;
    c.loss.kind = LossKind::MSE;
    c.backtest.k = std::min<std::size_t>(5, ds.stocks());
    c.output_dir = "runs/mse";
    c.seed = 7;
    c.deterministic = true;
    c.finalize();
    return c;
}

std::filesystem::path write_synthetic_bundle(const SynthOptions& opt, const std::filesystem::path& dir) {
    const MarketDataset ds = generate_synthetic(opt);
    write_csv(ds, dir / "data");
    const RunConfig cfg = synthetic_run_config(ds, "data");
    const auto path = dir / "config.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json(cfg).dump(2) << '\n';
    return path;
}

}  // namespace rankbench
