#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "factorcast/data/series.hpp"

namespace factorcast::data {

struct IdentifiableConfig {
    std::size_t components = 2;  // K
    std::size_t factors = 2;     // L per component
    std::size_t dims = 4;        // D, at least K*L for an injective mix
    std::size_t length = 2000;   // T
    double noise = 0.01;
    bool identity_mix = false;   // requires dims == K*L
    std::uint64_t prior_seed = 0;  // the prior is shared across sample seeds
};

/// Ground truth behind a generated series.
struct SyntheticTruth {
    Eigen::MatrixXd factors;  // [K*L, T], row i*L + j is factor j of component i
    Eigen::MatrixXd mixing;   // [D, K*L]
    Eigen::VectorXd offset;   // [D]
    Eigen::MatrixXd noise;    // [D, T]
};

struct IdentifiableData {
    SyntheticTruth truth;
    SeriesMatrix series;  // values = mixing * factors + offset + noise
};

/// Factors are drawn independently from the conditional prior at their absolute time
/// index; the observations are an injective affine mix of them plus Gaussian noise.
IdentifiableData generate_identifiable(const IdentifiableConfig& config, std::uint64_t seed);

struct SinusoidConfig {
    std::size_t dims = 2;
    std::size_t length = 600;
    std::vector<double> periods{12.0, 30.0};
    double noise = 0.05;
};

/// Each channel is a sum of sinusoids at the given periods with random amplitude and
/// phase, plus Gaussian noise. Hourly timestamps.
SeriesMatrix generate_sinusoid_mixture(const SinusoidConfig& config, std::uint64_t seed);

}  // namespace factorcast::data
