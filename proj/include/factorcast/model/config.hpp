#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace factorcast::model {

enum class TaskKind { LongHorizon, StockTrend };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& text);

/// Multi-scale layout: one signal component per sampling rate.
struct ComponentConfig {
    std::vector<std::size_t> rates{1};
    std::size_t factors = 4;  // per component
    std::size_t kernel = 3;
    std::size_t window = 4;  // steps of factor history fed to each predictor

    [[nodiscard]] std::size_t count() const noexcept { return rates.size(); }
    [[nodiscard]] std::size_t max_rate() const;
    /// Shortest series that covers one full kernel at the largest rate.
    [[nodiscard]] std::size_t min_length() const;
    void validate() const;
};

struct ModelConfig {
    std::size_t input_dim = 1;
    ComponentConfig components;
    std::size_t encoder_channels = 16;
    std::size_t encoder_layers = 2;
    std::size_t predictor_hidden = 128;
    std::size_t head_hidden = 128;
    TaskKind task = TaskKind::LongHorizon;
    std::size_t horizon = 1;
    // When false every predictor reads the factors of all components.
    bool independent = true;
    // Number of most recent retained indices at which next-step factors are
    // predicted; 0 uses all of them.
    std::size_t predictor_span = 0;
    std::uint64_t prior_seed = 0;

    /// Width of the task output per sample: input_dim * horizon, or 1 for stock.
    [[nodiscard]] std::size_t output_size() const noexcept;
    void validate() const;
};

/// Retained time indices {.., T-1-2r, T-1-r, T-1} in ascending order.
std::vector<long> retained_indices(std::size_t length, std::size_t rate);

}  // namespace factorcast::model
