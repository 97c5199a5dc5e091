#include "factorcast/model/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "factorcast/util/random.hpp"

namespace factorcast::model {

using num::Shape;
using num::Tensor;

std::string role_prefix(std::size_t component, Role role) {
    static constexpr const char* kNames[] = {"enc", "dec", "pred", "head"};
    return "c" + std::to_string(component) + "." + kNames[static_cast<int>(role)] + ".";
}

namespace {

Tensor xavier(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(shape);
    for (double& v : t.data) v = dist(rng);
    return t;
}

Tensor conv_weight(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
    return xavier(Shape{out, in, k}, in * k, out * k, rng);
}

Tensor dense_weight(std::size_t in, std::size_t out, Rng& rng) { return xavier(Shape{in, out}, in, out, rng); }

Tensor zeros(std::size_t n) { return Tensor(Shape{n}); }

void add_gru(num::ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden, Rng& rng) {
    ps.add(prefix + "w_input", dense_weight(in, 3 * hidden, rng));
    ps.add(prefix + "b_input", zeros(3 * hidden));
    ps.add(prefix + "w_hidden", dense_weight(hidden, 3 * hidden, rng));
    ps.add(prefix + "b_hidden", zeros(3 * hidden));
}

std::vector<std::int64_t> first_times(std::size_t count) {
    std::vector<std::int64_t> t(count);
    std::iota(t.begin(), t.end(), std::int64_t{0});
    return t;
}

// Row b*n + k of a [B*n, C] block, as [B, C].
Var row_of_block(Var block, std::size_t batch, std::size_t n, std::size_t k) {
    const std::size_t width = block.shape()[1];
    Var cube = num::reshape(block, Shape{batch, n, width});
    return num::reshape(num::slice(cube, 1, k, k + 1), Shape{batch, width});
}

}  // namespace

Model::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
    config_.validate();
    const auto& cc = config_.components;
    const std::size_t k_count = cc.count();
    const std::size_t l = cc.factors;
    const std::size_t d = config_.input_dim;
    const std::size_t c = config_.encoder_channels;
    const std::size_t pred_in = config_.independent ? l : l * k_count;

    prior_ = ConditionalPrior(checked_prior_seed(config_.prior_seed, k_count, l, first_times(k_count * l + 1)));

    Rng rng(derive_seed(init_seed, "model-init"));
    for (std::size_t i = 0; i < k_count; ++i) {
        const std::string enc = role_prefix(i, Role::Encoder);
        for (std::size_t layer = 0; layer < config_.encoder_layers; ++layer) {
            const std::size_t in = layer == 0 ? d : c;
            const std::string p = enc + "l" + std::to_string(layer) + ".";
            params_.add(p + "conv_w", conv_weight(c, in, cc.kernel, rng));
            params_.add(p + "conv_b", zeros(c));
            params_.add(p + "shortcut_w", conv_weight(c, in, 1, rng));
        }
        params_.add(enc + "mean_w", conv_weight(l, c, 1, rng));
        params_.add(enc + "mean_b", zeros(l));
        params_.add(enc + "logvar_w", conv_weight(l, c, 1, rng));
        params_.add(enc + "logvar_b", zeros(l));

        const std::string dec = role_prefix(i, Role::Decoder);
        params_.add(dec + "w", dense_weight(d, l, rng));
        params_.add(dec + "b", zeros(d));

        const std::string pred = role_prefix(i, Role::Predictor);
        add_gru(params_, pred, pred_in, config_.predictor_hidden, rng);
        params_.add(pred + "out_w", dense_weight(config_.predictor_hidden, l, rng));
        params_.add(pred + "out_b", zeros(l));

        const std::string head = role_prefix(i, Role::Head);
        if (config_.task == TaskKind::LongHorizon) {
            params_.add(head + "w1", dense_weight(l, config_.head_hidden, rng));
            params_.add(head + "b1", zeros(config_.head_hidden));
            params_.add(head + "w2", dense_weight(config_.head_hidden, config_.output_size(), rng));
            params_.add(head + "b2", zeros(config_.output_size()));
        } else {
            add_gru(params_, head, 2 * l, config_.head_hidden, rng);
            params_.add(head + "out_w", dense_weight(config_.head_hidden, 1, rng));
            params_.add(head + "out_b", zeros(1));
        }
    }
}

std::vector<num::Parameter*> Model::group(std::size_t component, Role role) {
    const std::string prefix = role_prefix(component, role);
    std::vector<num::Parameter*> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name.rfind(prefix, 0) == 0) out.push_back(&params_[i]);
    }
    return out;
}

Var Model::bind(num::Tape& tape, const std::string& name, bool track) {
    num::Parameter& p = params_.at(name);
    return track ? tape.parameter(p) : tape.constant(p.value);
}

ForwardPass Model::forward(num::Tape& tape, const Tensor& inputs, const ForwardOptions& options) {
    if (inputs.shape.rank() != 3 || inputs.shape[1] != config_.input_dim) {
        throw num::ShapeError("model expects inputs [B," + std::to_string(config_.input_dim) + ",T], got " +
                              inputs.shape.str());
    }
    const auto& cc = config_.components;
    const std::size_t batch = inputs.shape[0];
    const std::size_t length = inputs.shape[2];
    if (length < cc.min_length()) {
        throw std::invalid_argument("input length " + std::to_string(length) + " is below the minimum " +
                                    std::to_string(cc.min_length()) + " for these rates and kernel");
    }
    const bool track = options.track_gradients;
    auto bind_gru = [&](const std::string& prefix) {
        return GruVars{bind(tape, prefix + "w_input", track), bind(tape, prefix + "b_input", track),
                       bind(tape, prefix + "w_hidden", track), bind(tape, prefix + "b_hidden", track)};
    };

    ForwardPass pass;
    pass.inputs = tape.constant(inputs);
    std::vector<Var> recs;
    for (std::size_t i = 0; i < cc.count(); ++i) {
        ComponentPass comp;
        comp.rate = cc.rates[i];
        const std::string enc = role_prefix(i, Role::Encoder);
        EncoderVars ev;
        for (std::size_t layer = 0; layer < config_.encoder_layers; ++layer) {
            const std::string p = enc + "l" + std::to_string(layer) + ".";
            ev.layers.push_back({bind(tape, p + "conv_w", track), bind(tape, p + "conv_b", track),
                                 bind(tape, p + "shortcut_w", track)});
        }
        ev.mean_w = bind(tape, enc + "mean_w", track);
        ev.mean_b = bind(tape, enc + "mean_b", track);
        ev.logvar_w = bind(tape, enc + "logvar_w", track);
        ev.logvar_b = bind(tape, enc + "logvar_b", track);
        comp.posterior = encode(pass.inputs, ev, comp.rate, cc.kernel);

        if (options.sample) {
            Rng rng(derive_seed(options.noise_seed, "noise-c" + std::to_string(i)));
            std::normal_distribution<double> normal(0.0, 1.0);
            Tensor eps(comp.posterior.mean.shape());
            for (double& v : eps.data) v = normal(rng);
            comp.factors = sample_latent(comp.posterior.mean, comp.posterior.stddev, tape.constant(std::move(eps)));
        } else {
            comp.factors = comp.posterior.mean;
        }

        const std::string dec = role_prefix(i, Role::Decoder);
        comp.decoder_w = bind(tape, dec + "w", track);
        comp.reconstruction = reconstruct_component(comp.factors, comp.decoder_w, bind(tape, dec + "b", track));
        recs.push_back(comp.reconstruction);
        comp.retained = retained_indices(length, comp.rate);
        pass.components.push_back(std::move(comp));
    }

    pass.alpha = attention_weights(pass.inputs, recs);
    pass.reconstruction = combine_reconstruction(recs, pass.alpha);

    std::vector<Var> outputs;
    for (std::size_t i = 0; i < cc.count(); ++i) {
        ComponentPass& comp = pass.components[i];
        const std::size_t total = comp.retained.size();
        std::size_t n = total;
        if (config_.predictor_span > 0 && config_.predictor_span < n) n = config_.predictor_span;
        const std::size_t first = total - n;
        comp.predicted_at.assign(comp.retained.begin() + static_cast<long>(first), comp.retained.end());

        // Window step j for prediction k reads retained position first + k - (window - 1) + j.
        std::vector<Var> window;
        for (std::size_t j = 0; j < cc.window; ++j) {
            std::vector<long> cols(n);
            for (std::size_t k = 0; k < n; ++k) {
                const long pos = static_cast<long>(first + k + j) - static_cast<long>(cc.window - 1);
                cols[k] = pos < 0 ? -1 : comp.retained[static_cast<std::size_t>(pos)];
            }
            if (config_.independent) {
                window.push_back(num::take_columns(comp.factors, cols));
            } else {
                std::vector<Var> parts;
                for (const auto& other : pass.components) parts.push_back(num::take_columns(other.factors, cols));
                window.push_back(num::concat(parts, 1));
            }
        }
        const std::string pred = role_prefix(i, Role::Predictor);
        PredictorVars pv{bind_gru(pred), bind(tape, pred + "out_w", track), bind(tape, pred + "out_b", track)};
        comp.predicted = predict_next(window, pv);

        const std::string head = role_prefix(i, Role::Head);
        if (config_.task == TaskKind::LongHorizon) {
            MlpVars mv{bind(tape, head + "w1", track), bind(tape, head + "b1", track),
                       bind(tape, head + "w2", track), bind(tape, head + "b2", track)};
            comp.output = long_horizon_head(row_of_block(comp.predicted, batch, n, n - 1), mv);
        } else {
            std::vector<Var> pairs;
            pairs.reserve(n);
            for (std::size_t k = 0; k < n; ++k) {
                const long t = comp.predicted_at[k];
                Var current = num::take_columns(comp.factors, std::span<const long>(&t, 1));
                Var parts[] = {current, row_of_block(comp.predicted, batch, n, k)};
                pairs.push_back(num::concat(parts, 1));
            }
            StockHeadVars sv{bind_gru(head), bind(tape, head + "out_w", track), bind(tape, head + "out_b", track)};
            comp.output = num::reshape(stock_head(pairs, sv), Shape{batch, 1});
        }
        outputs.push_back(comp.output);
    }
    pass.prediction = mix_outputs(outputs, pass.alpha);
    return pass;
}

}  // namespace factorcast::model
