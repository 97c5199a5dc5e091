#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "factorcast/data/panel.hpp"

namespace factorcast::backtest {

struct BacktestConfig {
    std::size_t k = 30;
    double initial_capital = 1e8;
    double position = 2e6;   // cash committed to each new entrant
    double buy_cost = 5e-4;  // fraction of traded value
    double sell_cost = 15e-4;
    // Shares are bought in multiples of this; 0 allows fractional shares.
    double lot_size = 0.0;

    void validate() const;
};

struct Holding {
    double shares = 0.0;
    std::size_t entry_day = 0;
    double entry_price = 0.0;
};

enum class Action { Buy, Sell, Retain, SkipBuy };

std::string to_string(Action action);

/// One ledger event. Retain and SkipBuy move no cash and carry the reason in `note`.
struct Trade {
    std::size_t day = 0;
    std::size_t asset = 0;
    Action action = Action::Buy;
    double shares = 0.0;
    double price = 0.0;
    double amount = 0.0;  // shares * price
    double cost = 0.0;
    std::string note;
};

struct BacktestLedger {
    double initial_capital = 0.0;
    double cash = 0.0;
    std::map<std::size_t, Holding> holdings;  // by asset index
    std::vector<Trade> trades;
    std::vector<double> capital;  // per replayed day, after trading, at that day's close
    std::vector<double> cash_series;
    std::vector<double> cr;       // percent, (capital / initial - 1) * 100
    double costs_paid = 0.0;

    explicit BacktestLedger(double initial = 0.0) : initial_capital(initial), cash(initial) {}

    /// cash + holdings valued at `prices`.
    [[nodiscard]] double mark(std::span<const double> prices) const;
};

/// CR in percent for a capital level.
double cumulative_return(double capital, double initial_capital);

/// Largest peak-to-trough fall of a capital series, in percent of the peak.
double max_drawdown(std::span<const double> capital);

/// One TopK-Drop day at closing prices. The k highest finite scores form the target
/// set. Holdings outside it are sold unless untradable, in which case they are kept.
/// Entrants are bought in rank order at `position` plus cost; an untradable entrant
/// or one the cash cannot cover is skipped and logged. Throws if a tradable asset has
/// no finite score.
void topk_drop_step(std::size_t day, std::span<const double> scores, std::span<const std::uint8_t> tradable,
                    std::span<const double> prices, BacktestLedger& ledger, const BacktestConfig& config);

/// Scores aligned to a panel, [day][asset]. NaN marks no prediction; a day with no
/// finite score is replayed without trading.
struct Predictions {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    std::vector<double> scores;

    [[nodiscard]] double at(std::size_t day, std::size_t asset) const { return scores[day * assets.size() + asset]; }
};

/// An all-NaN grid shaped like `panel`.
Predictions empty_predictions(const data::StockPanel& panel);

/// Scatters per-sample scores into a grid by the samples' (day, asset).
Predictions scatter_predictions(const data::StockPanel& panel, const data::StockSamples& samples,
                                std::span<const double> values);

/// "date,asset,score" rows; every pair must belong to the panel.
Predictions load_predictions(const std::filesystem::path& path, const data::StockPanel& panel);
void write_predictions(const std::filesystem::path& path, const Predictions& predictions);

struct BacktestResult {
    BacktestLedger ledger;
    std::size_t first_day = 0;       // panel index of the first replayed day
    std::vector<std::string> dates;  // the replayed days
    double final_cr = 0.0;
    double max_drawdown = 0.0;
    double max_identity_error = 0.0;  // worst relative gap between the two capital routes
};

/// Replays every panel day from the first scored one. After each step the marked
/// capital must equal the previous capital plus price changes on held shares minus
/// costs; a mismatch beyond rounding throws. Misaligned dates or assets are rejected
/// before any trade.
BacktestResult run_backtest(const data::StockPanel& panel, const Predictions& predictions, const BacktestConfig& config);

/// "date,capital,cash,cr"
void write_cr_series(const std::filesystem::path& path, const BacktestResult& result);
/// "date,asset,action,shares,price,amount,cost,note"
void write_trade_log(const std::filesystem::path& path, const BacktestResult& result,
                     const std::vector<std::string>& asset_names);

std::string summarize(const BacktestResult& result);

}  // namespace factorcast::backtest
