#include "factorcast/backtest/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "factorcast/data/series.hpp"

namespace factorcast::backtest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Relative slack for float drift in share arithmetic, against the initial capital.
constexpr double kSlack = 1e-12;

}  // namespace

void BacktestConfig::validate() const {
    if (k == 0) throw std::invalid_argument("portfolio size k must be at least 1");
    if (!(initial_capital > 0.0) || !std::isfinite(initial_capital)) throw std::invalid_argument("initial capital must be positive");
    if (!(position > 0.0) || !std::isfinite(position)) throw std::invalid_argument("position size must be positive");
    if (!(buy_cost >= 0.0) || !(sell_cost >= 0.0) || !std::isfinite(buy_cost) || !std::isfinite(sell_cost)) {
        throw std::invalid_argument("transaction costs must be finite and non-negative");
    }
    if (!(lot_size >= 0.0) || !std::isfinite(lot_size)) throw std::invalid_argument("lot size must be non-negative");
    if (position * static_cast<double>(k) > initial_capital * (1.0 + kSlack)) {
        throw std::invalid_argument("k positions of " + num(position) + " exceed the initial capital " + num(initial_capital));
    }
}

std::string to_string(Action action) {
    switch (action) {
        case Action::Buy: return "buy";
        case Action::Sell: return "sell";
        case Action::Retain: return "retain";
        case Action::SkipBuy: return "skip_buy";
    }
    return "unknown";
}

double BacktestLedger::mark(std::span<const double> prices) const {
    double value = cash;
    for (const auto& [asset, h] : holdings) value += h.shares * prices[asset];
    return value;
}

double cumulative_return(double capital, double initial_capital) {
    if (!(initial_capital > 0.0)) throw std::invalid_argument("initial capital must be positive");
    return (capital / initial_capital - 1.0) * 100.0;
}

double max_drawdown(std::span<const double> capital) {
    double peak = -std::numeric_limits<double>::infinity(), worst = 0.0;
    for (double c : capital) {
        peak = std::max(peak, c);
        if (peak > 0.0) worst = std::max(worst, (peak - c) / peak * 100.0);
    }
    return worst;
}

void topk_drop_step(std::size_t day, std::span<const double> scores, std::span<const std::uint8_t> tradable,
                    std::span<const double> prices, BacktestLedger& ledger, const BacktestConfig& config) {
    const std::size_t n = scores.size();
    if (tradable.size() != n || prices.size() != n) throw std::invalid_argument("scores, flags and prices differ in length");
    std::vector<std::size_t> ranked;
    for (std::size_t a = 0; a < n; ++a) {
        if (!(prices[a] > 0.0) || !std::isfinite(prices[a])) {
            throw std::invalid_argument("day " + std::to_string(day) + ": asset " + std::to_string(a) + " has no positive price");
        }
        if (std::isfinite(scores[a])) {
            ranked.push_back(a);
        } else if (tradable[a]) {
            throw std::invalid_argument("day " + std::to_string(day) + ": tradable asset " + std::to_string(a) + " has no prediction");
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
    ranked.resize(std::min(ranked.size(), config.k));
    std::vector<bool> target(n, false);
    for (std::size_t a : ranked) target[a] = true;

    for (auto it = ledger.holdings.begin(); it != ledger.holdings.end();) {
        const std::size_t a = it->first;
        if (target[a]) {
            ++it;
            continue;
        }
        const double shares = it->second.shares;
        const double amount = shares * prices[a];
        if (!tradable[a]) {
            ledger.trades.push_back({day, a, Action::Retain, shares, prices[a], amount, 0.0, "untradable"});
            ++it;
            continue;
        }
        const double cost = amount * config.sell_cost;
        ledger.cash += amount - cost;
        ledger.costs_paid += cost;
        ledger.trades.push_back({day, a, Action::Sell, shares, prices[a], amount, cost, ""});
        it = ledger.holdings.erase(it);
    }

    const double slack = kSlack * ledger.initial_capital;
    for (std::size_t a : ranked) {
        if (ledger.holdings.count(a) != 0) continue;
        if (!tradable[a]) {
            ledger.trades.push_back({day, a, Action::SkipBuy, 0.0, prices[a], 0.0, 0.0, "untradable"});
            continue;
        }
        double shares = config.position / prices[a];
        if (config.lot_size > 0.0) shares = std::floor(shares / config.lot_size) * config.lot_size;
        if (shares <= 0.0) {
            ledger.trades.push_back({day, a, Action::SkipBuy, 0.0, prices[a], 0.0, 0.0, "below one lot"});
            continue;
        }
        const double amount = shares * prices[a];
        const double cost = amount * config.buy_cost;
        if (amount + cost > ledger.cash + slack) {
            ledger.trades.push_back({day, a, Action::SkipBuy, shares, prices[a], amount, cost, "insufficient cash"});
            continue;
        }
        ledger.cash -= amount + cost;
        if (ledger.cash < 0.0) ledger.cash = 0.0;  // only float drift within the slack reaches here
        ledger.costs_paid += cost;
        ledger.holdings[a] = {shares, day, prices[a]};
        ledger.trades.push_back({day, a, Action::Buy, shares, prices[a], amount, cost, ""});
    }
}

Predictions empty_predictions(const data::StockPanel& panel) {
    return {panel.dates, panel.assets, std::vector<double>(panel.days() * panel.asset_count(), kNaN)};
}

Predictions scatter_predictions(const data::StockPanel& panel, const data::StockSamples& samples,
                                std::span<const double> values) {
    if (values.size() != samples.day.size() || samples.asset.size() != samples.day.size()) {
        throw std::invalid_argument("got " + std::to_string(values.size()) + " scores for " +
                                    std::to_string(samples.day.size()) + " samples");
    }
    auto p = empty_predictions(panel);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (samples.day[i] >= panel.days() || samples.asset[i] >= panel.asset_count()) {
            throw std::invalid_argument("sample outside the panel");
        }
        p.scores[panel.cell(samples.day[i], samples.asset[i])] = values[i];
    }
    return p;
}

Predictions load_predictions(const std::filesystem::path& path, const data::StockPanel& panel) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read predictions " + path.string());
    std::unordered_map<std::string, std::size_t> day_of, asset_of;
    for (std::size_t d = 0; d < panel.days(); ++d) day_of[panel.dates[d]] = d;
    for (std::size_t a = 0; a < panel.asset_count(); ++a) asset_of[panel.assets[a]] = a;
    auto p = empty_predictions(panel);
    std::string line;
    if (!std::getline(is, line) || data::trim(line) != "date,asset,score") {
        throw std::runtime_error(path.string() + ": expected header date,asset,score");
    }
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (data::trim(line).empty()) continue;
        const auto cells = data::split_csv(line);
        const std::string where = path.string() + ":" + std::to_string(row);
        if (cells.size() != 3) throw std::runtime_error(where + ": expected 3 cells");
        const auto d = day_of.find(cells[0]);
        const auto a = asset_of.find(cells[1]);
        if (d == day_of.end()) throw std::runtime_error(where + ": date " + cells[0] + " is not in the panel");
        if (a == asset_of.end()) throw std::runtime_error(where + ": asset " + cells[1] + " is not in the panel");
        double v = 0.0;
        if (!data::parse_number(cells[2], v) || !std::isfinite(v)) throw std::runtime_error(where + ": bad score");
        double& slot = p.scores[panel.cell(d->second, a->second)];
        if (!std::isnan(slot)) throw std::runtime_error(where + ": duplicate (date, asset)");
        slot = v;
    }
    return p;
}

void write_predictions(const std::filesystem::path& path, const Predictions& predictions) {
    auto os = open(path);
    os << "date,asset,score\n";
    for (std::size_t d = 0; d < predictions.dates.size(); ++d)
        for (std::size_t a = 0; a < predictions.assets.size(); ++a) {
            const double v = predictions.at(d, a);
            if (std::isfinite(v)) os << predictions.dates[d] << ',' << predictions.assets[a] << ',' << num(v) << '\n';
        }
}

BacktestResult run_backtest(const data::StockPanel& panel, const Predictions& predictions, const BacktestConfig& config) {
    config.validate();
    panel.validate();
    if (predictions.dates != panel.dates) throw std::invalid_argument("prediction dates do not match the panel");
    if (predictions.assets != panel.assets) throw std::invalid_argument("prediction assets do not match the panel");
    const std::size_t n = panel.asset_count();
    if (predictions.scores.size() != panel.days() * n) throw std::invalid_argument("prediction grid has the wrong size");

    auto scored = [&](std::size_t d) {
        for (std::size_t a = 0; a < n; ++a)
            if (std::isfinite(predictions.at(d, a))) return true;
        return false;
    };
    std::size_t first = 0;
    while (first < panel.days() && !scored(first)) ++first;
    if (first == panel.days()) throw std::invalid_argument("no day carries a prediction");
    // Alignment is checked for every day before the first trade.
    for (std::size_t d = first; d < panel.days(); ++d) {
        if (!scored(d)) continue;
        for (std::size_t a = 0; a < n; ++a) {
            if (panel.tradable(d, a) && !std::isfinite(predictions.at(d, a))) {
                throw std::invalid_argument("day " + panel.dates[d] + ": tradable asset " + panel.assets[a] +
                                            " has no prediction");
            }
        }
    }

    BacktestResult r;
    r.first_day = first;
    r.ledger = BacktestLedger(config.initial_capital);
    std::vector<double> prices(n), previous(n);
    std::vector<std::uint8_t> flags(n);
    double capital = config.initial_capital;
    for (std::size_t d = first; d < panel.days(); ++d) {
        for (std::size_t a = 0; a < n; ++a) {
            prices[a] = panel.close(d, a);
            flags[a] = panel.tradable(d, a) ? 1 : 0;
        }
        // Second route: carry yesterday's capital forward by price moves and costs.
        double expected = capital;
        if (d > first)
            for (const auto& [a, h] : r.ledger.holdings) expected += h.shares * (prices[a] - previous[a]);
        const double costs_before = r.ledger.costs_paid;
        if (scored(d)) {
            topk_drop_step(d, std::span<const double>(predictions.scores).subspan(d * n, n), flags, prices, r.ledger, config);
        }
        expected -= r.ledger.costs_paid - costs_before;

        capital = r.ledger.mark(prices);
        const double error = std::abs(capital - expected) / config.initial_capital;
        r.max_identity_error = std::max(r.max_identity_error, error);
        if (error > 1e-9) {
            throw std::logic_error("accounting identity broken on " + panel.dates[d] + ": marked " + num(capital) +
                                   ", carried " + num(expected));
        }
        if (r.ledger.cash < 0.0) throw std::logic_error("negative cash on " + panel.dates[d]);
        r.ledger.capital.push_back(capital);
        r.ledger.cash_series.push_back(r.ledger.cash);
        r.ledger.cr.push_back(cumulative_return(capital, config.initial_capital));
        r.dates.push_back(panel.dates[d]);
        previous = prices;
    }
    r.final_cr = r.ledger.cr.back();
    r.max_drawdown = max_drawdown(r.ledger.capital);
    return r;
}

void write_cr_series(const std::filesystem::path& path, const BacktestResult& result) {
    auto os = open(path);
    os << "date,capital,cash,cr\n";
    for (std::size_t t = 0; t < result.dates.size(); ++t) {
        os << result.dates[t] << ',' << num(result.ledger.capital[t]) << ',' << num(result.ledger.cash_series[t]) << ','
           << num(result.ledger.cr[t]) << '\n';
    }
}

void write_trade_log(const std::filesystem::path& path, const BacktestResult& result,
                     const std::vector<std::string>& asset_names) {
    auto os = open(path);
    os << "date,asset,action,shares,price,amount,cost,note\n";
    for (const auto& t : result.ledger.trades) {
        const std::string& date = result.dates.at(t.day - result.first_day);
        os << date << ',' << asset_names.at(t.asset) << ',' << to_string(t.action) << ',' << num(t.shares) << ','
           << num(t.price) << ',' << num(t.amount) << ',' << num(t.cost) << ',' << t.note << '\n';
    }
}

std::string summarize(const BacktestResult& result) {
    std::size_t buys = 0, sells = 0, skipped = 0;
    for (const auto& t : result.ledger.trades) {
        buys += t.action == Action::Buy;
        sells += t.action == Action::Sell;
        skipped += t.action == Action::SkipBuy;
    }
    std::ostringstream os;
    os.precision(4);
    os << "backtest over " << result.dates.size() << " days: final CR " << result.final_cr << "%, max drawdown "
       << result.max_drawdown << "%, " << buys << " buys, " << sells << " sells, " << skipped << " skipped buys, costs "
       << result.ledger.costs_paid;
    return os.str();
}

}  // namespace factorcast::backtest
