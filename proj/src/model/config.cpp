#include "factorcast/model/config.hpp"

#include <algorithm>
#include <stdexcept>

namespace factorcast::model {

std::string to_string(TaskKind kind) {
    return kind == TaskKind::LongHorizon ? "long_horizon" : "stock";
}

TaskKind parse_task_kind(const std::string& text) {
    if (text == "long_horizon" || text == "long-horizon" || text == "forecast") {
        return TaskKind::LongHorizon;
    }
    if (text == "stock" || text == "stock_trend" || text == "stock-trend") return TaskKind::StockTrend;
    throw std::invalid_argument("unknown task kind '" + text + "' (expected long_horizon or stock)");
}

std::size_t ComponentConfig::max_rate() const {
    if (rates.empty()) throw std::invalid_argument("at least one sampling rate is required");
    return *std::max_element(rates.begin(), rates.end());
}

std::size_t ComponentConfig::min_length() const { return max_rate() * (kernel - 1) + 1; }

void ComponentConfig::validate() const {
    if (rates.empty()) throw std::invalid_argument("at least one sampling rate is required");
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i] == 0) throw std::invalid_argument("sampling rates must be positive");
        for (std::size_t j = 0; j < i; ++j) {
            if (rates[i] == rates[j]) {
                throw std::invalid_argument("duplicate sampling rate " + std::to_string(rates[i]));
            }
        }
    }
    if (factors == 0) throw std::invalid_argument("factors per component must be positive");
    if (kernel == 0) throw std::invalid_argument("kernel size must be positive");
    if (window == 0) throw std::invalid_argument("predictor window must be positive");
}

std::size_t ModelConfig::output_size() const noexcept {
    return task == TaskKind::StockTrend ? 1 : input_dim * horizon;
}

void ModelConfig::validate() const {
    components.validate();
    if (input_dim == 0) throw std::invalid_argument("input dimension must be positive");
    if (encoder_channels == 0 || encoder_layers == 0) {
        throw std::invalid_argument("encoder needs at least one layer and one channel");
    }
    if (predictor_hidden == 0 || head_hidden == 0) {
        throw std::invalid_argument("hidden sizes must be positive");
    }
    if (task == TaskKind::LongHorizon && horizon == 0) {
        throw std::invalid_argument("horizon must be at least 1");
    }
}

std::vector<long> retained_indices(std::size_t length, std::size_t rate) {
    if (length == 0 || rate == 0) return {};
    std::vector<long> out;
    for (std::size_t t = (length - 1) % rate; t < length; t += rate) out.push_back(static_cast<long>(t));
    return out;
}

}  // namespace factorcast::model
