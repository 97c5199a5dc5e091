#include "factorcast/model/layers.hpp"

#include <stdexcept>
#include <string>

namespace factorcast::model {

namespace {

Var zeros_like_rows(Var ref, std::size_t rows, std::size_t cols) {
    return ref.tape()->constant(num::Tensor(num::Shape{rows, cols}));
}

Var as_column_kernel(Var w) {
    // [out, in] -> [out, in, 1] so an affine map can run per time step.
    if (w.shape().rank() == 3) return w;
    return num::reshape(w, num::Shape{w.shape()[0], w.shape()[1], 1});
}

}  // namespace

Posterior encode(Var x, const EncoderVars& enc, std::size_t rate, std::size_t kernel) {
    if (x.shape().rank() != 3) throw num::ShapeError("encoder input must be [B,D,T], got " + x.shape().str());
    const std::size_t length = x.shape()[2];
    const std::size_t needed = (kernel - 1) * rate + 1;
    if (length < needed) {
        throw std::invalid_argument("series length " + std::to_string(length) + " is shorter than the " +
                                    std::to_string(needed) + " steps needed for kernel " +
                                    std::to_string(kernel) + " at rate " + std::to_string(rate));
    }
    if (enc.layers.empty()) throw std::invalid_argument("encoder has no layers");

    Var h = x;
    for (const auto& layer : enc.layers) {
        Var conv = num::tanh(num::conv1d(h, layer.conv_w, layer.conv_b, rate));
        h = conv + num::conv1d(h, layer.shortcut_w, Var{}, 1);
    }
    Posterior post;
    post.mean = num::conv1d(h, enc.mean_w, enc.mean_b, 1);
    post.logvar = num::conv1d(h, enc.logvar_w, enc.logvar_b, 1);
    post.stddev = num::exp(num::scale(post.logvar, 0.5));
    return post;
}

Var sample_latent(Var mean, Var stddev, Var noise) {
    for (double s : stddev.value().data) {
        if (!(s > 0.0)) throw std::domain_error("posterior standard deviation must be positive");
    }
    return mean + stddev * noise;
}

Var reconstruct_component(Var factors, Var w, Var b) {
    return num::conv1d(factors, as_column_kernel(w), b, 1);
}

Var component_weight(Var alpha, std::size_t i) {
    const std::size_t batch = alpha.shape()[0];
    return num::reshape(num::slice(alpha, 1, i, i + 1), num::Shape{batch});
}

Var attention_weights(Var x, std::span<const Var> reconstructions) {
    if (reconstructions.empty()) throw std::invalid_argument("attention needs at least one component");
    const std::size_t batch = x.shape()[0];
    std::vector<Var> scores;
    scores.reserve(reconstructions.size());
    for (const Var& rec : reconstructions) {
        // Square root of the per-sample Frobenius norm.
        Var norm = num::sqrt(num::sum_per_sample(num::square(x - rec)));
        scores.push_back(num::reshape(num::neg(num::sqrt(norm)), num::Shape{batch, 1}));
    }
    return num::softmax(num::concat(scores, 1));
}

Var combine_reconstruction(std::span<const Var> reconstructions, Var alpha) {
    if (reconstructions.empty()) throw std::invalid_argument("nothing to combine");
    Var total;
    for (std::size_t i = 0; i < reconstructions.size(); ++i) {
        Var term = num::scale_per_sample(reconstructions[i], component_weight(alpha, i) + 1.0);
        total = total.valid() ? total + term : term;
    }
    return total;
}

Var gru_step(Var x, Var h, const GruVars& cell) {
    const std::size_t hidden = h.shape()[1];
    Var gx = num::affine(x, cell.w_input, cell.b_input);
    Var gh = num::affine(h, cell.w_hidden, cell.b_hidden);
    Var z = num::sigmoid(num::slice(gx, 1, 0, hidden) + num::slice(gh, 1, 0, hidden));
    Var r = num::sigmoid(num::slice(gx, 1, hidden, 2 * hidden) + num::slice(gh, 1, hidden, 2 * hidden));
    Var n = num::tanh(num::slice(gx, 1, 2 * hidden, 3 * hidden) +
                      r * num::slice(gh, 1, 2 * hidden, 3 * hidden));
    return n + z * (h - n);
}

Var gru_sequence(std::span<const Var> sequence, const GruVars& cell) {
    if (sequence.empty()) throw std::invalid_argument("recurrent cell needs a nonempty sequence");
    const std::size_t hidden = cell.w_hidden.shape()[0];
    Var h = zeros_like_rows(sequence[0], sequence[0].shape()[0], hidden);
    for (const Var& x : sequence) h = gru_step(x, h, cell);
    return h;
}

Var predict_next(std::span<const Var> window, const PredictorVars& predictor) {
    if (window.empty()) throw std::invalid_argument("predictor has no history to read");
    return num::affine(gru_sequence(window, predictor.cell), predictor.out_w, predictor.out_b);
}

Var long_horizon_head(Var next_factors, const MlpVars& head) {
    return num::affine(num::relu(num::affine(next_factors, head.w1, head.b1)), head.w2, head.b2);
}

Var stock_head(std::span<const Var> pairs, const StockHeadVars& head) {
    if (pairs.empty()) throw std::invalid_argument("stock head received no factor pairs");
    Var out = num::affine(gru_sequence(pairs, head.cell), head.out_w, head.out_b);
    return num::reshape(out, num::Shape{out.shape()[0]});
}

Var mix_outputs(std::span<const Var> outputs, Var alpha) {
    if (outputs.empty()) throw std::invalid_argument("no component outputs to mix");
    if (alpha.shape()[1] != outputs.size()) {
        throw num::ShapeError("attention has " + std::to_string(alpha.shape()[1]) + " weights for " +
                              std::to_string(outputs.size()) + " outputs");
    }
    Var total;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (!outputs[i].valid()) throw std::invalid_argument("missing output for component " + std::to_string(i));
        Var term = num::scale_per_sample(outputs[i], component_weight(alpha, i));
        total = total.valid() ? total + term : term;
    }
    return total;
}

}  // namespace factorcast::model
