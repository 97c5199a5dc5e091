#pragma once

#include <span>
#include <vector>

#include "factorcast/numerics/ops.hpp"

// Building blocks of the latent factor model, expressed over tape variables so that
// they can be driven with hand-set weights as well as by Model.
namespace factorcast::model {

using num::Var;

struct EncoderLayerVars {
    Var conv_w;      // [C_out, C_in, k]
    Var conv_b;      // [C_out]
    Var shortcut_w;  // [C_out, C_in, 1], linear projection shortcut
};

struct EncoderVars {
    std::vector<EncoderLayerVars> layers;
    Var mean_w, mean_b;      // [L, C, 1], [L]
    Var logvar_w, logvar_b;  // [L, C, 1], [L]
};

/// Per-component posterior over the factors, each [B, L, T].
struct Posterior {
    Var mean;
    Var logvar;
    Var stddev;  // exp(logvar / 2)
};

/// Dilated causal convolution stack for one component. Each layer computes
/// tanh(conv(x)) + shortcut(x). Throws if T is shorter than (k-1)*rate + 1.
Posterior encode(Var x, const EncoderVars& enc, std::size_t rate, std::size_t kernel);

/// h = mean + stddev * noise, with noise a fixed standard-normal draw of equal shape.
Var sample_latent(Var mean, Var stddev, Var noise);

/// Affine per-time-step decoder: [B,L,T] -> [B,D,T] using w [D,L], b [D].
Var reconstruct_component(Var factors, Var w, Var b);

/// Softmax over components of -sqrt(||X - X_i||_F), per sample. Returns [B,K].
Var attention_weights(Var x, std::span<const Var> reconstructions);

/// Sum of (alpha_i + 1) * X_i.
Var combine_reconstruction(std::span<const Var> reconstructions, Var alpha);

/// Column i of a [B,K] weight matrix as a [B] vector.
Var component_weight(Var alpha, std::size_t i);

struct GruVars {
    Var w_input;   // [in, 3H], gate order: update, reset, candidate
    Var b_input;   // [3H]
    Var w_hidden;  // [H, 3H]
    Var b_hidden;  // [3H]
};

/// One gated recurrent step: z = s(xWz+hUz), r = s(xWr+hUr),
/// n = tanh(xWn + r*(hUn)), h' = (1-z)*n + z*h.
Var gru_step(Var x, Var h, const GruVars& cell);

/// Runs the cell over a sequence (oldest first) from a zero state; returns the final state.
Var gru_sequence(std::span<const Var> sequence, const GruVars& cell);

struct PredictorVars {
    GruVars cell;
    Var out_w;  // [H, L]
    Var out_b;  // [L]
};

/// One-step-ahead factor prediction from a window of factor vectors [N,in], oldest
/// first. Throws if the window is empty.
Var predict_next(std::span<const Var> window, const PredictorVars& predictor);

struct MlpVars {
    Var w1, b1;  // [L, hidden], [hidden]
    Var w2, b2;  // [hidden, out], [out]
};

/// Two-layer perceptron with ReLU hidden layer: [B,L] -> [B,out].
Var long_horizon_head(Var next_factors, const MlpVars& head);

struct StockHeadVars {
    GruVars cell;
    Var out_w;  // [H, 1]
    Var out_b;  // [1]
};

/// Recurrent head over paired steps [h(t_k), h_hat(t_k+1)], each [B, 2L]. Returns [B].
Var stock_head(std::span<const Var> pairs, const StockHeadVars& head);

/// Sum of alpha_i * output_i with raw (unadjusted) weights.
Var mix_outputs(std::span<const Var> outputs, Var alpha);

}  // namespace factorcast::model
