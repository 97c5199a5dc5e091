#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factorcast/model/model.hpp"

namespace factorcast::objective {

using num::Tensor;
using num::Var;

struct ObjectiveWeights {
    double prediction = 1.0;
    double kl = 0.5;
    double other = 1.0;  // reconstruction and predictability
    double long_horizon_multiplier = 1e-3;
    bool long_horizon = false;

    void validate() const;
    /// Factor applied to every non-prediction term.
    [[nodiscard]] double auxiliary_scale() const noexcept { return long_horizon ? long_horizon_multiplier : 1.0; }
};

struct LossParts {
    double prediction = 0.0;
    double reconstruction = 0.0;
    double predictability = 0.0;
    double kl = 0.0;
};

/// Piecewise-constant beta: stage m applies from epoch stages[m].first onward.
struct BetaSchedule {
    std::vector<std::pair<std::size_t, double>> stages{{0, 0.1}, {20, 0.5}, {30, 1.0}};

    void validate() const;
};

double beta_at(std::size_t epoch, const BetaSchedule& schedule);

/// KL(N(mq, sq^2) || N(mp, sp^2)).
double kl_gaussian(double mean_q, double std_q, double mean_p, double std_p);

/// Summed closed-form KL with the posterior given as mean and log-variance.
Var kl_gaussian(Var mean_q, Var logvar_q, const Tensor& mean_p, const Tensor& std_p);

/// Mean squared error over all entries.
Var reconstruction_loss(Var reconstruction, Var target);
Var prediction_loss(Var prediction, Var target);

/// Next-step consistency through the decoders. For component i and every predicted
/// t with t+1 inside the window, component i's share of the combined reconstruction
/// at t+1 is rebuilt from h_hat(t+1) instead of h(t+1):
///   x_tilde = X_hat(t+1) + (alpha_i + 1) * W_i (h_hat - h(t+1))
/// and scored by MSE against X(t+1). Per-component losses are summed.
Var predictability_loss(const model::ForwardPass& pass);

/// KL between posterior and the conditional prior at each component's retained
/// indices, divided by the number of observed entries B*D*T. start_time[b] is the
/// absolute time index of column 0 of sample b.
Var factor_kl(const model::ForwardPass& pass, const model::ConditionalPrior& prior,
              std::span<const std::int64_t> start_time);

/// lambda * pred + s * w_other * (rec + predy) + s * beta * w_kl * kl, s = auxiliary_scale().
/// Throws std::domain_error naming the first non-finite part.
double total_objective(const LossParts& parts, const ObjectiveWeights& weights, double beta);
Var total_objective(Var prediction, Var reconstruction, Var predictability, Var kl,
                    const ObjectiveWeights& weights, double beta);

struct BatchStats {
    double mean = 0.0;
    double variance = 0.0;
    double floor = 1e-8;

    [[nodiscard]] double scale() const noexcept;  // sqrt(variance + floor)
};

/// Normalizes with the mean and variance of every value in the batch.
std::pair<Tensor, BatchStats> batch_normalize(const Tensor& batch, double floor = 1e-8);
Tensor batch_denormalize(const Tensor& values, const BatchStats& stats);
Var batch_denormalize(Var values, const BatchStats& stats);

}  // namespace factorcast::objective
