#pragma once

#include <Eigen/Dense>
#include <vector>

#include "factorcast/model/model.hpp"
#include "factorcast/objective/train.hpp"

namespace factorcast::eval {

struct IdentifiabilityReport {
    std::vector<double> r2;  // per true factor
    double mean = 0.0;
    Eigen::MatrixXd map;     // [true, 2 * recovered] coefficients on (h, h^2)
    Eigen::VectorXd offset;  // [true]
    bool rank_deficient = false;
};

/// Regresses each true factor (row of truth, [F, T]) on an intercept plus every
/// recovered factor and its square (rows of recovered, [M, T]). Scores are R^2
/// clipped to [0, 1]. A rank-deficient design falls back to the minimum-norm solution
/// and sets the flag.
IdentifiabilityReport identifiability_score(const Eigen::MatrixXd& recovered, const Eigen::MatrixXd& truth);

/// Posterior means of every factor over the whole series ([D, T]) as one sample, in
/// evaluation mode. Rows are ordered component-major (i * L + j). Long-horizon models
/// see the same batch normalization as in training.
Eigen::MatrixXd factor_series(model::Model& model, const Eigen::MatrixXd& series);

/// Posterior means at the last step of each sample's window, [K*L, N] in sample order.
/// For samples taken one step apart this is the daily factor series of the model.
Eigen::MatrixXd last_step_factors(model::Model& model, const objective::SampleSet& samples, std::size_t batch_size = 64);

}  // namespace factorcast::eval
