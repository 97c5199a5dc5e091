#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factorcast/model/config.hpp"
#include "factorcast/model/layers.hpp"
#include "factorcast/model/prior.hpp"
#include "factorcast/numerics/checkpoint.hpp"

namespace factorcast::model {

enum class Role { Encoder, Decoder, Predictor, Head };

std::string role_prefix(std::size_t component, Role role);

struct ForwardOptions {
    bool sample = true;  // false: factors are the posterior means
    std::uint64_t noise_seed = 0;
    bool track_gradients = true;  // false: parameters enter the tape as constants
};

struct ComponentPass {
    std::size_t rate = 1;
    Posterior posterior;
    Var factors;         // [B,L,T]
    Var reconstruction;  // [B,D,T]
    Var decoder_w;       // [D,L]
    std::vector<long> retained;      // every retained index, ascending
    std::vector<long> predicted_at;  // the retained indices t_k that carry h_hat(t_k + 1)
    Var predicted;                   // [B*n, L], row b*n + k holds h_hat(predicted_at[k] + 1)
    Var output;                      // [B, out]
};

struct ForwardPass {
    Var inputs;  // [B,D,T]
    std::vector<ComponentPass> components;
    Var alpha;           // [B,K], raw attention weights
    Var reconstruction;  // [B,D,T], sum of (alpha_i + 1) X_i
    Var prediction;      // [B, out]
};

/// Parameters and forward composition of the multi-scale latent factor model.
class Model {
public:
    Model(ModelConfig config, std::uint64_t init_seed);

    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] num::ParameterSet& parameters() noexcept { return params_; }
    [[nodiscard]] const num::ParameterSet& parameters() const noexcept { return params_; }
    [[nodiscard]] std::vector<num::Parameter*> group(std::size_t component, Role role);

    /// Prior in use; its seed may differ from config().prior_seed after a reseed.
    [[nodiscard]] const ConditionalPrior& prior() const noexcept { return prior_; }

    /// inputs: [B,D,T] with T >= config().components.min_length().
    ForwardPass forward(num::Tape& tape, const num::Tensor& inputs, const ForwardOptions& options = {});

private:
    Var bind(num::Tape& tape, const std::string& name, bool track);

    ModelConfig config_;
    num::ParameterSet params_;
    ConditionalPrior prior_;
};

}  // namespace factorcast::model
