#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "factorcast/model/model.hpp"
#include "factorcast/objective/train.hpp"

namespace factorcast::eval {

struct PredictabilityCheck {
    double tau = 0.1;   // tolerance on the factor-space gap
    double tau1 = 0.1;  // tolerance on the decoder error of the predicted factors
    double tau2 = 0.1;  // tolerance on the decoder error of the encoded factors
};

struct GapStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q90 = 0.0;
    double max = 0.0;
};

GapStats gap_stats(std::vector<double> values);

/// Per-component gap statistics over one-step-ahead instances (b, t) with t+1 inside
/// the window. For each instance:
///   gap        = |h_hat(t+1) - h(t+1)|
///   pred_error = |X_hat(t+1) + (alpha_i + 1) W_i (h_hat - h) - X(t+1)|
///   enc_error  = |X_hat(t+1) - X(t+1)|
/// The two decoder errors bound the gap: gap <= (pred_error + enc_error) / s_min,
/// with s_min the smallest singular value of (alpha_i + 1) W_i. When s_min is zero
/// (more factors than channels) the bound is vacuous and not checked.
struct ComponentGap {
    std::size_t rate = 1;
    GapStats gap;
    GapStats relative_gap;  // gap over the centered RMS of h(t+1), scale free
    GapStats pred_error;
    GapStats enc_error;
    std::size_t within_tau = 0;       // gap < tau
    std::size_t dual_within = 0;      // pred_error < tau1 and enc_error < tau2
    std::size_t dual_bound_held = 0;  // of those, gap <= (tau1 + tau2) / s_min
    std::size_t bound_checked = 0;    // instances with s_min > 0
    std::size_t bound_violations = 0; // gap above (pred_error + enc_error) / s_min
    double min_singular = 0.0;        // smallest s_min seen
};

/// Accumulates the instances of one forward pass into per-component lists.
struct GapAccumulator {
    explicit GapAccumulator(PredictabilityCheck check) : check(check) {}

    void add(const model::ForwardPass& pass);
    [[nodiscard]] std::vector<ComponentGap> finish() const;

    PredictabilityCheck check;
    struct Lists {
        std::size_t rate = 1;
        std::vector<double> gap, pred, enc;
        std::vector<Eigen::VectorXd> target;  // h(t+1) per instance
        std::size_t dual_within = 0, dual_bound_held = 0, bound_checked = 0, bound_violations = 0;
        double min_singular = -1.0;
    };
    std::vector<Lists> comps;
};

/// Gap statistics of a trained model on held-out samples, in evaluation mode.
std::vector<ComponentGap> predictability_gap(model::Model& model, const objective::SampleSet& held_out,
                                             const PredictabilityCheck& check, std::size_t batch_size = 64);

}  // namespace factorcast::eval
