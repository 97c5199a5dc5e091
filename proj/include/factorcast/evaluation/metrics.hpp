#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "factorcast/numerics/tensor.hpp"

namespace factorcast::eval {

struct ErrorMetrics {
    double mse = 0.0;
    double mae = 0.0;
};

ErrorMetrics mse_mae(std::span<const double> predicted, std::span<const double> target);

/// Rows are samples, columns channel-major (d * horizon + h). Entry h pools every
/// channel at step h + 1.
std::vector<ErrorMetrics> per_horizon(const num::Tensor& predicted, const num::Tensor& target, std::size_t horizon);

/// Pearson correlation; NaN when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
/// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(std::span<const double> values);
double spearman(std::span<const double> a, std::span<const double> b);

/// One trading day's predictions and realized returns, aligned by asset.
struct CrossSection {
    std::vector<double> predicted;
    std::vector<double> realized;
};

/// Splits flat (day, predicted, realized) triples into per-day cross-sections,
/// ordered by day.
std::vector<CrossSection> group_by_day(std::span<const std::size_t> day, std::span<const double> predicted,
                                       std::span<const double> realized);

struct CorrelationReport {
    double ic = 0.0;
    double ic_std = 0.0;
    double rank_ic = 0.0;
    double rank_ic_std = 0.0;
    std::size_t days_used = 0;
    std::size_t days_skipped = 0;  // fewer than two assets or zero variance
};

CorrelationReport ic_rank_ic(std::span<const CrossSection> days);

struct PrecisionReport {
    double percent = 0.0;
    std::size_t days_used = 0;
    std::size_t days_skipped = 0;  // fewer than n assets
};

/// Mean over days of the share of the top-n predictions whose realized return is
/// positive, in percent. Ties in the prediction are broken by asset order.
PrecisionReport precision_at_n(std::span<const CrossSection> days, std::size_t n);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for fewer than two values
};

MeanStd mean_std(std::span<const double> values);

}  // namespace factorcast::eval
