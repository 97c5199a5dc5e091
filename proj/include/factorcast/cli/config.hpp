#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factorcast/backtest/backtest.hpp"
#include "factorcast/data/panel.hpp"
#include "factorcast/data/synthetic.hpp"
#include "factorcast/data/windows.hpp"
#include "factorcast/model/config.hpp"
#include "factorcast/objective/train.hpp"

namespace factorcast::cli {

/// Flat "key = value" settings. '#' starts a comment; later keys override earlier ones.
class KeyValues {
public:
    static KeyValues parse(std::istream& is, const std::string& origin);
    static KeyValues load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Everything a subcommand needs, after defaults, file and flags are merged.
struct RunConfig {
    std::uint64_t seed = 0;
    model::ModelConfig model;
    objective::FitConfig fit;

    // Long-horizon data handling.
    std::size_t input = 96;  // window length T
    bool univariate = true;
    data::SplitRatios split;
    std::size_t eval_batch = 64;

    // Stock data handling.
    data::StockSampleOptions stock;
    std::vector<std::size_t> precision_at{1, 3, 5, 10};

    backtest::BacktestConfig backtest;

    // Synthetic generators.
    data::IdentifiableConfig identifiable;
    data::SinusoidConfig sinusoid;
    data::StockPanelConfig panel;

    // Ablations, applied by apply_ablations.
    bool no_decomp = false;
    bool no_disent = false;
    bool no_reconst = false;
    bool no_ind = false;

    void apply_ablations();
    void validate() const;
};

/// Default-initialized config overridden by every recognized key. Unknown keys and
/// unparsable values throw with the key name.
RunConfig resolve(const KeyValues& kv);

/// Every key resolve() understands with its current value; resolve(render(c))
/// reproduces c.
KeyValues render(const RunConfig& config);
void write_config(const std::filesystem::path& path, const RunConfig& config);

/// Per-module seeds split from the root seed; logged with every run.
struct Seeds {
    std::uint64_t init = 0;   // model parameters
    std::uint64_t fit = 0;    // shuffling and sampling noise
    std::uint64_t synth = 0;  // generators
};
Seeds derive_seeds(std::uint64_t root);

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key);

}  // namespace factorcast::cli
