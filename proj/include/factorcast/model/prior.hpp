#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "factorcast/numerics/tensor.hpp"

namespace factorcast::model {

inline constexpr double kPriorMeanLow = -1.0;
inline constexpr double kPriorMeanHigh = 1.0;
inline constexpr double kPriorStdLow = 0.5;
inline constexpr double kPriorStdHigh = 2.0;

struct PriorPoint {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Gaussian prior whose location and scale are a hash of (seed, component, factor,
/// absolute time index). The time index is the first row of the auxiliary matrix.
class ConditionalPrior {
public:
    explicit ConditionalPrior(std::uint64_t seed = 0) : seed_(seed) {}

    [[nodiscard]] PriorPoint at(std::size_t component, std::size_t factor, std::int64_t time) const noexcept;
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/// Observed series with the time index stacked on top: row 0 is t, rows 1..D are X.
struct AuxiliaryMatrix {
    num::Tensor values;  // [D+1, T]

    static AuxiliaryMatrix build(const num::Tensor& series, std::int64_t first_time = 0);
    [[nodiscard]] std::int64_t time(std::size_t column) const;
    [[nodiscard]] std::size_t length() const { return values.shape[1]; }
};

/// Prior parameters over a block of time, each [K, L, T].
struct PriorParams {
    num::Tensor mean;
    num::Tensor stddev;
    std::uint64_t seed_used = 0;
    double condition_number = 0.0;  // of the natural-parameter difference matrix
};

/// Natural parameters (mu / s^2, -1 / (2 s^2)).
std::pair<double, double> natural_parameters(PriorPoint p) noexcept;

/// Largest-to-smallest singular value ratio of the 2LK x LK matrix whose columns are
/// consecutive differences of the stacked natural parameters at the given points.
/// Returns infinity when the matrix is rank deficient.
double difference_condition_number(const ConditionalPrior& prior, std::size_t components,
                                   std::size_t factors, std::span<const std::int64_t> times);

inline constexpr double kMaxConditionNumber = 1e12;

/// Evaluates the prior over the auxiliary matrix's time row. The condition on the
/// natural parameters is checked at LK+1 points spread over the block; if it fails,
/// one derived seed is tried before giving up with std::runtime_error.
PriorParams prior_params(const AuxiliaryMatrix& aux, std::size_t components, std::size_t factors,
                         std::uint64_t seed);

/// Seed actually usable for (components, factors): the given seed, or its single
/// reseed if the given one fails the check. Throws if neither passes.
std::uint64_t checked_prior_seed(std::uint64_t seed, std::size_t components, std::size_t factors,
                                 std::span<const std::int64_t> times);

}  // namespace factorcast::model
