#include "factorcast/objective/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace factorcast::objective {

using num::Shape;

void ObjectiveWeights::validate() const {
    if (prediction < 0 || kl < 0 || other < 0 || long_horizon_multiplier < 0) {
        throw std::invalid_argument("objective weights must be nonnegative");
    }
}

void BetaSchedule::validate() const {
    if (stages.empty()) throw std::invalid_argument("beta schedule has no stages");
    for (std::size_t m = 1; m < stages.size(); ++m) {
        if (stages[m].first <= stages[m - 1].first) {
            throw std::invalid_argument("beta schedule thresholds must strictly increase");
        }
        if (stages[m].second < stages[m - 1].second) {
            throw std::invalid_argument("beta schedule values must not decrease");
        }
    }
}

double beta_at(std::size_t epoch, const BetaSchedule& schedule) {
    double beta = 0.0;
    for (const auto& [start, value] : schedule.stages) {
        if (epoch >= start) beta = value;
    }
    return beta;
}

double kl_gaussian(double mean_q, double std_q, double mean_p, double std_p) {
    if (!(std_q > 0.0) || !(std_p > 0.0)) throw std::domain_error("KL needs positive standard deviations");
    const double d = mean_q - mean_p;
    return std::log(std_p / std_q) + (std_q * std_q + d * d) / (2.0 * std_p * std_p) - 0.5;
}

Var kl_gaussian(Var mean_q, Var logvar_q, const Tensor& mean_p, const Tensor& std_p) {
    if (!(mean_q.shape() == mean_p.shape) || !(std_p.shape == mean_p.shape) ||
        !(logvar_q.shape() == mean_q.shape())) {
        throw num::ShapeError("KL operands must share one shape");
    }
    num::Tape& tape = *mean_q.tape();
    Tensor inv_two_var(std_p.shape);
    Tensor offset(std_p.shape);
    for (std::size_t k = 0; k < std_p.size(); ++k) {
        const double s = std_p.data[k];
        if (!(s > 0.0)) throw std::domain_error("prior standard deviation must be positive");
        inv_two_var.data[k] = 1.0 / (2.0 * s * s);
        offset.data[k] = std::log(s) - 0.5;
    }
    Var spread = num::exp(logvar_q) + num::square(mean_q - tape.constant(mean_p));
    Var terms = spread * tape.constant(std::move(inv_two_var)) - 0.5 * logvar_q + tape.constant(std::move(offset));
    return num::sum(terms);
}

Var reconstruction_loss(Var reconstruction, Var target) { return num::mse(reconstruction, target); }

Var prediction_loss(Var prediction, Var target) { return num::mse(prediction, target); }

Var predictability_loss(const model::ForwardPass& pass) {
    const std::size_t batch = pass.inputs.shape()[0];
    const std::size_t length = pass.inputs.shape()[2];
    Var total;
    for (std::size_t i = 0; i < pass.components.size(); ++i) {
        const auto& comp = pass.components[i];
        const std::size_t n = comp.predicted_at.size();
        std::size_t m = 0;
        while (m < n && static_cast<std::size_t>(comp.predicted_at[m]) + 1 < length) ++m;
        if (m == 0) continue;
        const std::size_t l = comp.predicted.shape()[1];

        std::vector<long> next(m);
        for (std::size_t k = 0; k < m; ++k) next[k] = comp.predicted_at[k] + 1;
        Var predicted = num::reshape(comp.predicted, Shape{batch, n, l});
        predicted = num::reshape(num::slice(predicted, 1, 0, m), Shape{batch * m, l});
        Var encoded = num::take_columns(comp.factors, next);
        Var combined = num::take_columns(pass.reconstruction, next);
        Var observed = num::take_columns(pass.inputs, next);

        // (alpha_i + 1) repeated for each of the m rows of a sample.
        Var weight = num::reshape(model::component_weight(pass.alpha, i), Shape{batch, 1, 1});
        const std::vector<long> zeros(m, 0);
        weight = num::reshape(num::take_columns(weight, zeros), Shape{batch * m}) + 1.0;

        Var shift = num::matmul(predicted - encoded, num::transpose(comp.decoder_w));
        Var swapped = combined + num::scale_per_sample(shift, weight);
        Var loss = num::mse(swapped, observed);
        total = total.valid() ? total + loss : loss;
    }
    if (!total.valid()) total = pass.inputs.tape()->constant(Tensor::scalar(0.0));
    return total;
}

Var factor_kl(const model::ForwardPass& pass, const model::ConditionalPrior& prior,
              std::span<const std::int64_t> start_time) {
    const std::size_t batch = pass.inputs.shape()[0];
    if (start_time.size() != batch) {
        throw std::invalid_argument("KL needs one start time per sample");
    }
    const std::size_t entries = pass.inputs.value().size();
    Var total;
    for (std::size_t i = 0; i < pass.components.size(); ++i) {
        const auto& comp = pass.components[i];
        const std::size_t n = comp.retained.size();
        const std::size_t l = comp.factors.shape()[1];
        Var mean = num::take_columns(comp.posterior.mean, comp.retained);
        Var logvar = num::take_columns(comp.posterior.logvar, comp.retained);
        Tensor mp(Shape{batch * n, l});
        Tensor sp(Shape{batch * n, l});
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t j = 0; j < l; ++j) {
                    const auto p = prior.at(i, j, start_time[b] + comp.retained[k]);
                    mp.at(b * n + k, j) = p.mean;
                    sp.at(b * n + k, j) = p.stddev;
                }
            }
        }
        Var kl = kl_gaussian(mean, logvar, mp, sp);
        total = total.valid() ? total + kl : kl;
    }
    return num::scale(total, 1.0 / static_cast<double>(entries));
}

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite ") + name + " loss");
}

}  // namespace

double total_objective(const LossParts& parts, const ObjectiveWeights& weights, double beta) {
    require_finite(parts.prediction, "prediction");
    require_finite(parts.reconstruction, "reconstruction");
    require_finite(parts.predictability, "predictability");
    require_finite(parts.kl, "KL");
    const double s = weights.auxiliary_scale();
    return weights.prediction * parts.prediction +
           s * weights.other * (parts.reconstruction + parts.predictability) + s * beta * weights.kl * parts.kl;
}

Var total_objective(Var prediction, Var reconstruction, Var predictability, Var kl,
                    const ObjectiveWeights& weights, double beta) {
    const double s = weights.auxiliary_scale();
    return num::scale(prediction, weights.prediction) +
           num::scale(reconstruction + predictability, s * weights.other) + num::scale(kl, s * beta * weights.kl);
}

double BatchStats::scale() const noexcept { return std::sqrt(variance + floor); }

std::pair<Tensor, BatchStats> batch_normalize(const Tensor& batch, double floor) {
    if (batch.size() == 0) throw std::invalid_argument("cannot normalize an empty batch");
    BatchStats stats;
    stats.floor = floor;
    double sum = 0.0;
    for (double v : batch.data) sum += v;
    stats.mean = sum / static_cast<double>(batch.size());
    double ss = 0.0;
    for (double v : batch.data) ss += (v - stats.mean) * (v - stats.mean);
    stats.variance = ss / static_cast<double>(batch.size());
    Tensor out(batch.shape);
    const double sd = stats.scale();
    for (std::size_t k = 0; k < batch.size(); ++k) out.data[k] = (batch.data[k] - stats.mean) / sd;
    return {std::move(out), stats};
}

Tensor batch_denormalize(const Tensor& values, const BatchStats& stats) {
    Tensor out(values.shape);
    const double sd = stats.scale();
    for (std::size_t k = 0; k < values.size(); ++k) out.data[k] = values.data[k] * sd + stats.mean;
    return out;
}

Var batch_denormalize(Var values, const BatchStats& stats) {
    return num::scale(values, stats.scale()) + stats.mean;
}

}  // namespace factorcast::objective
