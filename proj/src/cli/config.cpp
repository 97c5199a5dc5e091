#include "factorcast/cli/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "factorcast/data/series.hpp"
#include "factorcast/util/random.hpp"

namespace factorcast::cli {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const std::string& expected) {
    throw std::invalid_argument("config key '" + key + "': '" + text + "' is not " + expected);
}

double to_double(const std::string& text, const std::string& key) {
    double v = 0.0;
    if (!data::parse_number(data::trim(text), v)) bad_value(key, text, "a number");
    return v;
}

std::uint64_t to_u64(const std::string& text, const std::string& key) {
    const std::string t = data::trim(text);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) bad_value(key, text, "a non-negative integer");
    errno = 0;
    const unsigned long long v = std::strtoull(t.c_str(), nullptr, 10);
    if (errno == ERANGE) bad_value(key, text, "in range");
    return v;
}

std::size_t to_size(const std::string& text, const std::string& key) { return static_cast<std::size_t>(to_u64(text, key)); }

bool to_bool(const std::string& text, const std::string& key) {
    const std::string t = data::trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    bad_value(key, text, "a boolean");
}

std::vector<double> to_double_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    for (const auto& cell : data::split_csv(text)) out.push_back(to_double(cell, key));
    if (out.empty()) bad_value(key, text, "a comma-separated list");
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string flag(bool b) { return b ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += num(v[i]);
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define FC_SIZE(key, field) \
    Key{key, [](RunConfig& c, const std::string& v, const std::string& k) { c.field = to_size(v, k); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define FC_DOUBLE(key, field) \
    Key{key, [](RunConfig& c, const std::string& v, const std::string& k) { c.field = to_double(v, k); }, \
        [](const RunConfig& c) { return num(c.field); }}
#define FC_BOOL(key, field) \
    Key{key, [](RunConfig& c, const std::string& v, const std::string& k) { c.field = to_bool(v, k); }, \
        [](const RunConfig& c) { return flag(c.field); }}

const std::vector<Key>& keys() {
    static const std::vector<Key> table{
        Key{"seed", [](RunConfig& c, const std::string& v, const std::string& k) { c.seed = to_u64(v, k); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
        Key{"prior_seed",
            [](RunConfig& c, const std::string& v, const std::string& k) {
                c.model.prior_seed = to_u64(v, k);
                c.identifiable.prior_seed = c.model.prior_seed;
            },
            [](const RunConfig& c) { return std::to_string(c.model.prior_seed); }},
        Key{"task", [](RunConfig& c, const std::string& v, const std::string&) { c.model.task = model::parse_task_kind(data::trim(v)); },
            [](const RunConfig& c) { return model::to_string(c.model.task); }},
        Key{"rates", [](RunConfig& c, const std::string& v, const std::string& k) { c.model.components.rates = parse_size_list(v, k); },
            [](const RunConfig& c) { return join(c.model.components.rates); }},
        FC_SIZE("factors", model.components.factors),
        FC_SIZE("kernel", model.components.kernel),
        FC_SIZE("predictor_window", model.components.window),
        FC_SIZE("encoder_channels", model.encoder_channels),
        FC_SIZE("encoder_layers", model.encoder_layers),
        FC_SIZE("predictor_hidden", model.predictor_hidden),
        FC_SIZE("head_hidden", model.head_hidden),
        FC_SIZE("horizon", model.horizon),
        FC_BOOL("independent", model.independent),
        FC_SIZE("predictor_span", model.predictor_span),

        FC_SIZE("epochs", fit.epochs),
        FC_SIZE("patience", fit.patience),
        Key{"selection", [](RunConfig& c, const std::string& v, const std::string&) { c.fit.selection = objective::parse_selection(data::trim(v)); },
            [](const RunConfig& c) { return objective::to_string(c.fit.selection); }},
        FC_SIZE("batch_size", fit.batch_size),
        FC_DOUBLE("learning_rate", fit.learning_rate),
        FC_DOUBLE("prediction_weight", fit.weights.prediction),
        FC_DOUBLE("kl_weight", fit.weights.kl),
        FC_DOUBLE("other_weight", fit.weights.other),
        FC_DOUBLE("long_horizon_multiplier", fit.weights.long_horizon_multiplier),
        Key{"beta_stages",
            [](RunConfig& c, const std::string& v, const std::string& k) {
                // "epoch:beta,epoch:beta,..."
                c.fit.schedule.stages.clear();
                for (const auto& cell : data::split_csv(v)) {
                    const auto colon = cell.find(':');
                    if (colon == std::string::npos) bad_value(k, v, "a list of epoch:beta pairs");
                    c.fit.schedule.stages.emplace_back(to_size(cell.substr(0, colon), k), to_double(cell.substr(colon + 1), k));
                }
            },
            [](const RunConfig& c) {
                std::string out;
                for (const auto& [e, b] : c.fit.schedule.stages) out += (out.empty() ? "" : ",") + std::to_string(e) + ":" + num(b);
                return out;
            }},

        FC_SIZE("input", input),
        FC_BOOL("univariate", univariate),
        Key{"split",
            [](RunConfig& c, const std::string& v, const std::string& k) {
                const auto r = to_double_list(v, k);
                if (r.size() != 3) bad_value(k, v, "three ratios train,valid,test");
                c.split = {r[0], r[1], r[2]};
            },
            [](const RunConfig& c) { return num(c.split.train) + "," + num(c.split.valid) + "," + num(c.split.test); }},
        FC_SIZE("eval_batch", eval_batch),

        FC_SIZE("stock_window", stock.window),
        FC_BOOL("skip_suspended", stock.skip_suspended),
        FC_BOOL("zscore_labels", stock.zscore_labels),
        Key{"precision_at", [](RunConfig& c, const std::string& v, const std::string& k) { c.precision_at = parse_size_list(v, k); },
            [](const RunConfig& c) { return join(c.precision_at); }},

        FC_SIZE("topk", backtest.k),
        FC_DOUBLE("capital", backtest.initial_capital),
        FC_DOUBLE("position", backtest.position),
        FC_DOUBLE("buy_cost", backtest.buy_cost),
        FC_DOUBLE("sell_cost", backtest.sell_cost),
        FC_DOUBLE("lot_size", backtest.lot_size),

        FC_SIZE("identifiable.components", identifiable.components),
        FC_SIZE("identifiable.factors", identifiable.factors),
        FC_SIZE("identifiable.dims", identifiable.dims),
        FC_SIZE("identifiable.length", identifiable.length),
        FC_DOUBLE("identifiable.noise", identifiable.noise),
        FC_BOOL("identifiable.identity_mix", identifiable.identity_mix),

        FC_SIZE("sinusoid.dims", sinusoid.dims),
        FC_SIZE("sinusoid.length", sinusoid.length),
        Key{"sinusoid.periods", [](RunConfig& c, const std::string& v, const std::string& k) { c.sinusoid.periods = to_double_list(v, k); },
            [](const RunConfig& c) { return join(c.sinusoid.periods); }},
        FC_DOUBLE("sinusoid.noise", sinusoid.noise),

        FC_SIZE("panel.assets", panel.assets),
        FC_SIZE("panel.days", panel.days),
        FC_DOUBLE("panel.weekly_amplitude", panel.weekly_amplitude),
        FC_DOUBLE("panel.monthly_amplitude", panel.monthly_amplitude),
        FC_DOUBLE("panel.noise", panel.noise),
        FC_DOUBLE("panel.drift", panel.drift),
        FC_DOUBLE("panel.suspension", panel.suspension),
        FC_DOUBLE("panel.limit_threshold", panel.limit_threshold),

        FC_BOOL("no_decomp", no_decomp),
        FC_BOOL("no_disent", no_disent),
        FC_BOOL("no_reconst", no_reconst),
        FC_BOOL("no_ind", no_ind),
    };
    return table;
}

#undef FC_SIZE
#undef FC_DOUBLE
#undef FC_BOOL

}  // namespace

KeyValues KeyValues::parse(std::istream& is, const std::string& origin) {
    KeyValues kv;
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = data::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(origin + ":" + std::to_string(row) + ": expected key = value");
        }
        const std::string key = data::trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(row) + ": empty key");
        kv.set(key, data::trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config " + path.string());
    return parse(is, path.string());
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& cell : data::split_csv(text)) out.push_back(to_size(cell, key));
    if (out.empty()) bad_value(key, text, "a comma-separated list");
    return out;
}

void RunConfig::apply_ablations() {
    if (no_decomp) model.components.rates = {1};
    if (no_disent) fit.weights.kl = 0.0;
    if (no_reconst) fit.weights.other = 0.0;
    if (no_ind) model.independent = false;
}

void RunConfig::validate() const {
    model.components.validate();
    fit.weights.validate();
    fit.schedule.validate();
    split.validate();
    backtest.validate();
    if (fit.batch_size == 0 || eval_batch == 0) throw std::invalid_argument("batch sizes must be positive");
    const std::size_t needed = model.components.min_length();
    if (model.task == model::TaskKind::StockTrend) {
        if (stock.window < needed) {
            throw std::invalid_argument("stock_window " + std::to_string(stock.window) +
                                        " is shorter than the largest rate's receptive field " + std::to_string(needed));
        }
    } else if (input < needed) {
        throw std::invalid_argument("input length " + std::to_string(input) + " is shorter than the largest rate's receptive field " +
                                    std::to_string(needed));
    }
    for (std::size_t n : precision_at)
        if (n == 0) throw std::invalid_argument("precision_at entries must be at least 1");
}

RunConfig resolve(const KeyValues& kv) {
    RunConfig c;
    std::map<std::string, const Key*> index;
    for (const auto& k : keys()) index[k.name] = &k;
    for (const auto& [key, value] : kv.entries()) {
        const auto it = index.find(key);
        if (it == index.end()) throw std::invalid_argument("unknown config key '" + key + "'");
        it->second->set(c, value, key);
    }
    return c;
}

KeyValues render(const RunConfig& config) {
    KeyValues kv;
    for (const auto& k : keys()) kv.set(k.name, k.get(config));
    return kv;
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    // Table order keeps related keys together.
    for (const auto& k : keys()) os << k.name << " = " << k.get(config) << '\n';
}

Seeds derive_seeds(std::uint64_t root) {
    return {derive_seed(root, "init"), derive_seed(root, "fit"), derive_seed(root, "synth")};
}

}  // namespace factorcast::cli
