#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "factorcast/objective/train.hpp"

namespace factorcast::data {

/// Feature columns f1..f6 of a panel row.
enum Feature : std::size_t { Close = 0, Open, High, Low, Vwap, Volume, kFeatureCount };

/// Daily cross-section of assets. Row-major by (day, asset).
///
/// label(d, a) is the next-day return (P(d+1) - P(d)) / P(d) of the close column.
/// For the final day the next close lies outside the panel, so its label is carried
/// as given.
struct StockPanel {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    std::vector<double> features;  // [day][asset][6]
    std::vector<double> labels;    // [day][asset]
    std::vector<std::uint8_t> suspended;
    std::vector<std::uint8_t> limit;

    [[nodiscard]] std::size_t days() const noexcept { return dates.size(); }
    [[nodiscard]] std::size_t asset_count() const noexcept { return assets.size(); }
    [[nodiscard]] std::size_t cell(std::size_t day, std::size_t asset) const { return day * assets.size() + asset; }

    [[nodiscard]] double feature(std::size_t day, std::size_t asset, std::size_t f) const {
        return features[cell(day, asset) * kFeatureCount + f];
    }
    [[nodiscard]] double close(std::size_t day, std::size_t asset) const { return feature(day, asset, Close); }
    [[nodiscard]] double label(std::size_t day, std::size_t asset) const { return labels[cell(day, asset)]; }
    [[nodiscard]] bool is_suspended(std::size_t day, std::size_t asset) const { return suspended[cell(day, asset)] != 0; }
    [[nodiscard]] bool is_limit(std::size_t day, std::size_t asset) const { return limit[cell(day, asset)] != 0; }
    /// Neither suspended nor at its price limit.
    [[nodiscard]] bool tradable(std::size_t day, std::size_t asset) const {
        return !is_suspended(day, asset) && !is_limit(day, asset);
    }

    /// Checks sizes, finiteness and positive prices.
    void validate() const;
};

struct StockPanelConfig {
    std::size_t assets = 50;
    std::size_t days = 500;
    double weekly_amplitude = 0.02;   // log-price amplitude of the period-5 cycle
    double monthly_amplitude = 0.03;  // and of the period-20 cycle
    double noise = 0.01;              // daily log-return innovation scale
    double drift = 0.0;               // daily log-return drift
    double suspension = 0.01;         // chance that an asset is halted on a given day
    double limit_threshold = 0.095;   // |daily return| at or above this flags the price limit
    double base_price = 10.0;
    double base_volume = 1e6;
};

/// Deterministic part of one asset's log close:
/// level + drift*t + weekly_amp*sin(2*pi*t/5 + weekly_phase) + monthly_amp*sin(2*pi*t/20 + monthly_phase).
struct AssetCycle {
    double level = 0.0;
    double weekly_amp = 0.0;
    double weekly_phase = 0.0;
    double monthly_amp = 0.0;
    double monthly_phase = 0.0;

    [[nodiscard]] double log_price(double t, double drift) const;
};

/// Per-asset cycles used by generate_stock_panel for the same (config, seed).
std::vector<AssetCycle> stock_cycles(const StockPanelConfig& config, std::uint64_t seed);

/// Log close = random walk + period-5 and period-20 sinusoids with per-asset phase and
/// amplitude. A halted asset keeps its previous close and trades no volume; the latent
/// path keeps moving, so the first day back jumps.
StockPanel generate_stock_panel(const StockPanelConfig& config, std::uint64_t seed);

/// CSV "date,asset,f1..f6,label,suspended,limit" with every (date, asset) pair present
/// exactly once. Dates and assets keep their order of first appearance.
StockPanel load_panel(const std::filesystem::path& path);
StockPanel read_panel(std::istream& is);
void write_panel(const std::filesystem::path& path, const StockPanel& panel);

struct StockSampleOptions {
    std::size_t window = 60;
    bool skip_suspended = true;   // no sample for an asset halted on the prediction day
    bool zscore_labels = false;   // per-day cross-sectional standardization of targets
};

struct StockSamples {
    objective::SampleSet set;  // groups hold one trading day each
    std::vector<std::size_t> day;
    std::vector<std::size_t> asset;
};

/// One sample per (day, asset) for days in [begin, end) with a full window behind them.
/// Price features are divided by the window's last close and volume by its last volume,
/// then shifted by -1, so each input is scale free.
StockSamples stock_samples(const StockPanel& panel, std::size_t begin, std::size_t end,
                           const StockSampleOptions& options = {});

}  // namespace factorcast::data
