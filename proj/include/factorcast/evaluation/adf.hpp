#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace factorcast::eval {

// Constant-only ADF critical values for large samples.
inline constexpr double kAdfCritical1 = -3.46;
inline constexpr double kAdfCritical5 = -2.87;
inline constexpr double kAdfCritical10 = -2.57;

struct AdfReport {
    double statistic = 0.0;    // gamma / se(gamma)
    double coefficient = 0.0;  // gamma on s(t-1)
    double std_error = 0.0;
    std::size_t lag = 0;
    std::size_t observations = 0;  // rows of the final regression
    bool reject_1 = false;
    bool reject_5 = false;
    bool reject_10 = false;
};

struct AdfOptions {
    std::optional<std::size_t> max_lag;  // default floor(12 * (n / 100)^(1/4))
    bool eliminate = true;               // drop trailing lags while |t| < threshold
    double elimination_t = 1.645;
};

/// Regression of ds(t) on a constant, s(t-1) and ds(t-1..t-p), fitted by least squares.
/// Throws std::invalid_argument when the series is too short (< 20 + p) and
/// std::domain_error when the regression is degenerate, such as for a constant series.
AdfReport adf_fixed_lag(std::span<const double> series, std::size_t lag);

/// Lag selection by backward elimination: starting from the maximum lag, the last
/// lag is dropped while its |t| is below the threshold. Every candidate is fitted on
/// the sample available at the maximum lag; the chosen lag is refitted on all rows.
AdfReport adf_test(std::span<const double> series, const AdfOptions& options = {});

std::size_t default_max_lag(std::size_t length);

}  // namespace factorcast::eval
