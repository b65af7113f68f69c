#include "rankbench/config.hpp"

#include "rankbench/error.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace rankbench {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    require_object(j, where.empty() ? "config" : where);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == key;
        if (!ok) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    const std::string name = where.empty() ? key : where + "." + key;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(name + ": expected a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(name + ": expected a string");
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(name + ": expected a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(name + ": expected a number");
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

template <class T>
std::vector<T> get_list(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    const std::string name = where + "." + key;
    if (!v.is_array() || v.empty()) throw ConfigError(name + ": expected a non-empty array");
    std::vector<T> out;
    for (const json& e : v) {
        if constexpr (std::is_unsigned_v<T>) {
            if (!e.is_number_integer() || e.get<long long>() < 0) throw ConfigError(name + ": expected non-negative integers");
        } else {
            if (!e.is_number()) throw ConfigError(name + ": expected numbers");
        }
        out.push_back(e.get<T>());
    }
    return out;
}

LossSpec parse_loss(const json& j) {
    check_keys(j, "loss", {"kind", "lambda", "margin", "scale", "temperature"});
    LossSpec s;
    if (!j.contains("kind")) throw ConfigError("loss.kind is required");
    s.kind = parse_loss_kind(get<std::string>(j, "kind", "loss", ""));
    const std::string k(to_string(s.kind));
    auto reject = [&](const char* key, bool applies) {
        if (j.contains(key) && !applies) throw ConfigError(std::string("loss.") + key + " does not apply to loss " + k);
    };
    reject("lambda", is_pairwise(s.kind));
    reject("margin", uses_margin(s.kind));
    reject("scale", uses_scale(s.kind));
    reject("temperature", uses_temperature(s.kind));
    s.lambda = get<double>(j, "lambda", "loss", s.lambda);
    s.margin = get<double>(j, "margin", "loss", s.margin);
    s.scale = get<double>(j, "scale", "loss", s.scale);
    s.temperature = get<double>(j, "temperature", "loss", s.temperature);
    s.validate();
    return s;
}

template <class T>
void put_list(ordered_json& j, const char* key, const std::vector<T>& v) {
    if (!v.empty()) j[key] = v;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

std::filesystem::path RunConfig::resolved_data_directory() const {
    const std::filesystem::path p(data_directory);
    return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunConfig::resolved_output_dir() const {
    const std::filesystem::path p(output_dir);
    return p.is_absolute() ? p : base_dir / p;
}

void RunConfig::finalize() {
    model.window = window;
    model.features = kFeatureChannels;
    train.seed = seed;
    if (data_directory.empty()) throw ConfigError("data.directory is required");
    if (tickers.empty()) throw ConfigError("data.tickers must list at least one ticker");
    std::set<std::string> seen;
    for (const auto& t : tickers)
        if (t.empty() || !seen.insert(t).second) throw ConfigError("data.tickers: empty or duplicate ticker '" + t + "'");
    if (!(train_fraction > 0.0) || !(val_fraction > 0.0) || train_fraction + val_fraction >= 1.0)
        throw ConfigError("split: need train > 0, val > 0 and train + val < 1");
    if (window < 1) throw ConfigError("window must be >= 1");
    model.validate();
    train.validate();
    loss.validate();
    backtest.validate_for(tickers.size());
    if (grid) {
        if (grid->size() == 0) throw ConfigError("grid is empty");
        grid->validate_for(loss.kind, model);
    }
}

ordered_json model_config_to_json(const ModelConfig& m) {
    ordered_json j;
    j["d_model"] = m.d_model;
    j["n_layers"] = m.n_layers;
    j["n_heads"] = m.n_heads;
    j["d_ff"] = m.d_ff;
    j["dropout"] = m.dropout;
    j["window"] = m.window;
    j["features"] = m.features;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    check_keys(j, "model", {"d_model", "n_layers", "n_heads", "d_ff", "dropout", "window", "features"});
    ModelConfig m;
    m.d_model = get<std::size_t>(j, "d_model", "model", m.d_model);
    m.n_layers = get<std::size_t>(j, "n_layers", "model", m.n_layers);
    m.n_heads = get<std::size_t>(j, "n_heads", "model", m.n_heads);
    m.d_ff = get<std::size_t>(j, "d_ff", "model", m.d_ff);
    m.dropout = get<double>(j, "dropout", "model", m.dropout);
    m.window = get<std::size_t>(j, "window", "model", m.window);
    m.features = get<std::size_t>(j, "features", "model", m.features);
    m.validate();
    return m;
}

ordered_json loss_spec_to_json(const LossSpec& s) {
    ordered_json j;
    j["kind"] = std::string(to_string(s.kind));
    if (is_pairwise(s.kind)) j["lambda"] = s.lambda;
    if (uses_margin(s.kind)) j["margin"] = s.margin;
    if (uses_scale(s.kind)) j["scale"] = s.scale;
    if (uses_temperature(s.kind)) j["temperature"] = s.temperature;
    return j;
}

ordered_json train_config_to_json(const TrainConfig& tc) {
    ordered_json j;
    j["max_epochs"] = tc.max_epochs;
    j["learning_rate"] = tc.learning_rate;
    j["weight_decay"] = tc.weight_decay;
    j["batch_size"] = tc.batch_size;
    j["early_stopping_patience"] = tc.early_stopping_patience;
    j["lr_schedule"] = {{"kind", std::string(to_string(tc.lr_schedule.kind))},
                        {"factor", tc.lr_schedule.factor},
                        {"patience", tc.lr_schedule.patience},
                        {"min_lr", tc.lr_schedule.min_lr}};
    return j;
}

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    check_keys(j, "", {"data", "split", "window", "model", "train", "loss", "grid", "backtest", "metrics", "output_dir",
                       "seed", "deterministic"});
    RunConfig c;
    c.base_dir = base_dir;

    if (!j.contains("data")) throw ConfigError("config is missing the 'data' section");
    const json& d = j.at("data");
    check_keys(d, "data", {"directory", "tickers"});
    c.data_directory = get<std::string>(d, "directory", "data", "");
    if (d.contains("tickers")) {
        if (!d.at("tickers").is_array()) throw ConfigError("data.tickers: expected an array of strings");
        for (const json& t : d.at("tickers")) {
            if (!t.is_string()) throw ConfigError("data.tickers: expected an array of strings");
            c.tickers.push_back(t.get<std::string>());
        }
    }

    if (j.contains("split")) {
        const json& s = j.at("split");
        check_keys(s, "split", {"train", "val"});
        c.train_fraction = get<double>(s, "train", "split", c.train_fraction);
        c.val_fraction = get<double>(s, "val", "split", c.val_fraction);
    }
    c.window = get<std::size_t>(j, "window", "", c.window);

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"d_model", "n_layers", "n_heads", "d_ff", "dropout"});
        c.model.d_model = get<std::size_t>(m, "d_model", "model", c.model.d_model);
        c.model.n_layers = get<std::size_t>(m, "n_layers", "model", c.model.n_layers);
        c.model.n_heads = get<std::size_t>(m, "n_heads", "model", c.model.n_heads);
        c.model.d_ff = get<std::size_t>(m, "d_ff", "model", c.model.d_ff);
        c.model.dropout = get<double>(m, "dropout", "model", c.model.dropout);
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, "train", {"max_epochs", "learning_rate", "weight_decay", "batch_size", "early_stopping_patience",
                                "lr_schedule"});
        c.train.max_epochs = get<std::size_t>(t, "max_epochs", "train", c.train.max_epochs);
        c.train.learning_rate = get<double>(t, "learning_rate", "train", c.train.learning_rate);
        c.train.weight_decay = get<double>(t, "weight_decay", "train", c.train.weight_decay);
        c.train.batch_size = get<std::size_t>(t, "batch_size", "train", c.train.batch_size);
        c.train.early_stopping_patience =
            get<std::size_t>(t, "early_stopping_patience", "train", c.train.early_stopping_patience);
        if (t.contains("lr_schedule")) {
            const json& s = t.at("lr_schedule");
            check_keys(s, "train.lr_schedule", {"kind", "factor", "patience", "min_lr"});
            c.train.lr_schedule.kind = parse_schedule_kind(
                get<std::string>(s, "kind", "train.lr_schedule", std::string(to_string(c.train.lr_schedule.kind))));
            c.train.lr_schedule.factor = get<double>(s, "factor", "train.lr_schedule", c.train.lr_schedule.factor);
            c.train.lr_schedule.patience = get<std::size_t>(s, "patience", "train.lr_schedule", c.train.lr_schedule.patience);
            c.train.lr_schedule.min_lr = get<double>(s, "min_lr", "train.lr_schedule", c.train.lr_schedule.min_lr);
        }
    }

    if (j.contains("loss")) c.loss = parse_loss(j.at("loss"));

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        check_keys(g, "grid", {"dropout", "d_model", "d_ff", "learning_rate", "lambda", "margin", "scale", "temperature"});
        GridSpec grid;
        grid.dropout = get_list<double>(g, "dropout", "grid");
        grid.d_model = get_list<std::size_t>(g, "d_model", "grid");
        grid.d_ff = get_list<std::size_t>(g, "d_ff", "grid");
        grid.learning_rate = get_list<double>(g, "learning_rate", "grid");
        grid.lambda = get_list<double>(g, "lambda", "grid");
        grid.margin = get_list<double>(g, "margin", "grid");
        grid.scale = get_list<double>(g, "scale", "grid");
        grid.temperature = get_list<double>(g, "temperature", "grid");
        c.grid = grid;
    }

    if (j.contains("backtest")) {
        const json& b = j.at("backtest");
        check_keys(b, "backtest", {"k", "risk_free_rate", "trading_days_per_year", "initial_value", "annualization"});
        c.backtest.k = get<std::size_t>(b, "k", "backtest", c.backtest.k);
        c.backtest.risk_free_rate = get<double>(b, "risk_free_rate", "backtest", c.backtest.risk_free_rate);
        c.backtest.trading_days_per_year =
            get<std::size_t>(b, "trading_days_per_year", "backtest", c.backtest.trading_days_per_year);
        c.backtest.initial_value = get<double>(b, "initial_value", "backtest", c.backtest.initial_value);
        c.backtest.annualization = parse_annualization(
            get<std::string>(b, "annualization", "backtest", std::string(to_string(c.backtest.annualization))));
    }

    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        check_keys(m, "metrics", {"icir_scaling"});
        c.icir_scaling = parse_icir_scaling(get<std::string>(m, "icir_scaling", "metrics", "none"));
    }

    c.output_dir = get<std::string>(j, "output_dir", "", c.output_dir);
    c.seed = get<std::uint64_t>(j, "seed", "", c.seed);
    c.deterministic = get<bool>(j, "deterministic", "", c.deterministic);
    c.finalize();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_run_config(j, std::filesystem::absolute(path).parent_path());
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["data"] = {{"directory", c.data_directory}, {"tickers", c.tickers}};
    j["split"] = {{"train", c.train_fraction}, {"val", c.val_fraction}};
    j["window"] = c.window;
    j["model"] = {{"d_model", c.model.d_model},
                  {"n_layers", c.model.n_layers},
                  {"n_heads", c.model.n_heads},
                  {"d_ff", c.model.d_ff},
                  {"dropout", c.model.dropout}};
    j["train"] = train_config_to_json(c.train);
    j["loss"] = loss_spec_to_json(c.loss);
    if (c.grid) {
        ordered_json g = ordered_json::object();
        put_list(g, "dropout", c.grid->dropout);
        put_list(g, "d_model", c.grid->d_model);
        put_list(g, "d_ff", c.grid->d_ff);
        put_list(g, "learning_rate", c.grid->learning_rate);
        put_list(g, "lambda", c.grid->lambda);
        put_list(g, "margin", c.grid->margin);
        put_list(g, "scale", c.grid->scale);
        put_list(g, "temperature", c.grid->temperature);
        j["grid"] = g;
    }
    j["backtest"] = {{"k", c.backtest.k},
                     {"risk_free_rate", c.backtest.risk_free_rate},
                     {"trading_days_per_year", c.backtest.trading_days_per_year},
                     {"initial_value", c.backtest.initial_value},
                     {"annualization", std::string(to_string(c.backtest.annualization))}};
    j["metrics"] = {{"icir_scaling", std::string(to_string(c.icir_scaling))}};
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["deterministic"] = c.deterministic;
    return j;
}

}  // namespace rankbench
