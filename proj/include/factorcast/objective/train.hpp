#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "factorcast/model/model.hpp"
#include "factorcast/objective/losses.hpp"

namespace factorcast::objective {

struct Batch {
    Tensor inputs;   // [B,D,T]
    Tensor targets;  // [B,out]
    std::vector<std::int64_t> start_time;
};

/// Fixed-shape training examples stored contiguously.
class SampleSet {
public:
    SampleSet() = default;
    SampleSet(std::size_t input_dim, std::size_t length, std::size_t target_size);

    /// input: D*T values row-major, target: target_size values.
    void add(std::span<const double> input, std::span<const double> target, std::int64_t start_time);

    [[nodiscard]] std::size_t size() const noexcept { return start_time_.size(); }
    [[nodiscard]] bool empty() const noexcept { return start_time_.empty(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] std::size_t length() const noexcept { return length_; }
    [[nodiscard]] std::size_t target_size() const noexcept { return target_size_; }

    [[nodiscard]] Batch gather(std::span<const std::size_t> ids) const;
    [[nodiscard]] std::span<const double> input(std::size_t i) const;
    [[nodiscard]] std::span<const double> target(std::size_t i) const;
    [[nodiscard]] std::int64_t start_time(std::size_t i) const { return start_time_[i]; }

    /// Optional fixed batches (e.g. one trading day per batch). When empty, batches
    /// are drawn from a shuffled order.
    std::vector<std::vector<std::size_t>> groups;

private:
    std::size_t input_dim_ = 0;
    std::size_t length_ = 0;
    std::size_t target_size_ = 0;
    std::vector<double> inputs_;
    std::vector<double> targets_;
    std::vector<std::int64_t> start_time_;
};

struct BatchResult {
    Var total;
    Var prediction_term;
    LossParts parts;
    double total_value = 0.0;
    Tensor prediction;  // [B,out] on the target scale
    model::ForwardPass pass;
};

/// Forward pass plus every loss term. Long-horizon models see batch-normalized
/// inputs and are scored after the prediction is mapped back to the target scale.
BatchResult evaluate_batch(num::Tape& tape, model::Model& model, const Batch& batch,
                           const ObjectiveWeights& weights, double beta, const model::ForwardOptions& options);

struct EpochRecord {
    std::size_t epoch = 0;
    double beta = 0.0;
    LossParts train;
    double train_total = 0.0;
    LossParts valid;
    double valid_total = 0.0;
};

enum class Selection {
    Prediction,  // lowest validation prediction loss
    Total,       // lowest validation total objective
    Final,       // the last epoch run; patience still stops on the prediction loss
};

std::string to_string(Selection s);
Selection parse_selection(const std::string& text);

struct FitConfig {
    std::size_t epochs = 50;
    std::size_t patience = 10;
    std::size_t batch_size = 32;
    double learning_rate = 2e-4;
    ObjectiveWeights weights;
    BetaSchedule schedule;
    std::uint64_t seed = 0;
    // Which epoch's parameters fit() keeps. Totals under different beta stages are
    // compared as they are.
    Selection selection = Selection::Prediction;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_valid = 0.0;  // selection loss at best_epoch
    bool diverged = false;
    std::string message;
};

/// Mini-batch training with early stopping on the validation prediction loss. The
/// model is left holding the parameters chosen by config.selection. Deterministic
/// for a given seed. A non-finite loss stops training and restores the last good
/// parameters.
FitResult fit(model::Model& model, const SampleSet& train, const SampleSet& valid, const FitConfig& config);

/// Mean loss parts over a sample set in evaluation mode (posterior means, no noise).
LossParts evaluate_set(model::Model& model, const SampleSet& set, const ObjectiveWeights& weights,
                       std::size_t batch_size);

/// Predictions [N,out] on the target scale, in evaluation mode.
Tensor predict(model::Model& model, const SampleSet& set, std::size_t batch_size);

/// epoch,beta,train_total,train_prediction,...,valid_kl
void write_loss_history(const std::filesystem::path& path, std::span<const EpochRecord> history);

}  // namespace factorcast::objective
