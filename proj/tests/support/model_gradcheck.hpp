#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "factorcast/objective/train.hpp"
#include "gradcheck.hpp"

namespace factorcast::testing {

/// Tiny model: D=2, T=12, K=2, L=2, rates {1,2}.
inline model::ModelConfig tiny_config(model::TaskKind task) {
    model::ModelConfig cfg;
    cfg.input_dim = 2;
    cfg.components.rates = {1, 2};
    cfg.components.factors = 2;
    cfg.components.kernel = 3;
    cfg.components.window = 3;
    cfg.encoder_channels = 3;
    cfg.predictor_hidden = 3;
    cfg.head_hidden = 4;
    cfg.task = task;
    cfg.horizon = 2;
    cfg.prior_seed = 5;
    return cfg;
}

inline objective::Batch tiny_batch(const model::ModelConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    objective::Batch b;
    const std::size_t batch = 3, length = 12;
    b.inputs = random_tensor(num::Shape{batch, cfg.input_dim, length}, rng, -1.5, 1.5);
    b.targets = random_tensor(num::Shape{batch, cfg.output_size()}, rng);
    b.start_time = {0, 7, 20};
    return b;
}

/// Largest relative error per parameter group ("c0.enc", "c1.pred", ...), analytic
/// gradient of the total objective versus central differences with step 1e-5. The
/// latent noise is held fixed so the objective is a deterministic function.
inline std::map<std::string, double> model_gradient_errors(model::TaskKind task, double beta = 1.0,
                                                           objective::ObjectiveWeights weights = {}) {
    model::Model m(tiny_config(task), 17);
    const objective::Batch batch = tiny_batch(m.config(), 23);
    const model::ForwardOptions opts{true, 99, true};

    m.parameters().zero_grad();
    {
        num::Tape tape;
        auto r = objective::evaluate_batch(tape, m, batch, weights, beta, opts);
        tape.backward(r.total);
    }
    auto objective_value = [&] {
        num::Tape tape;
        return objective::evaluate_batch(tape, m, batch, weights, beta, opts).total_value;
    };

    std::map<std::string, double> worst;
    const double h = 1e-5;
    auto& ps = m.parameters();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto& p = ps[i];
        const std::string group = p.name.substr(0, p.name.find('.', p.name.find('.') + 1));
        double& w = worst[group];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double keep = p.value.data[k];
            p.value.data[k] = keep + h;
            const double up = objective_value();
            p.value.data[k] = keep - h;
            const double down = objective_value();
            p.value.data[k] = keep;
            w = std::max(w, relative_error(p.grad.data[k], (up - down) / (2 * h)));
        }
    }
    return worst;
}

}  // namespace factorcast::testing
