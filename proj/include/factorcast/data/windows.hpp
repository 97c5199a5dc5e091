#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "factorcast/data/series.hpp"
#include "factorcast/objective/train.hpp"

namespace factorcast::data {

struct SplitRatios {
    double train = 0.6;
    double valid = 0.2;
    double test = 0.2;

    void validate() const;
};

/// Half-open column range [begin, end).
struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
};

struct Splits {
    Segment train, valid, test;
};

/// Train takes floor(T * train), test floor(T * test), valid the columns between.
/// Every segment must be nonempty.
Splits chronological_split(std::size_t length, const SplitRatios& ratios);
SeriesMatrix slice_columns(const SeriesMatrix& series, Segment segment);

struct Window {
    std::size_t input_begin = 0;   // first input column
    std::size_t target_begin = 0;  // first target column, = input_begin + input
};

/// Stride-1 windows inside one segment of the given length (offsets are relative to
/// the segment): length - input - horizon + 1 of them.
std::vector<Window> make_windows(std::size_t length, std::size_t input, std::size_t horizon);

/// Windows whose targets fall inside `segment` of a longer series. With context
/// allowed, inputs may reach back before the segment start (never before column 0).
/// Offsets are absolute columns.
std::vector<Window> segment_windows(Segment segment, std::size_t input, std::size_t horizon, bool allow_context);

/// Prepends (k-1)*r zero columns.
Eigen::MatrixXd pad_for_dilation(const Eigen::MatrixXd& x, std::size_t kernel, std::size_t rate);

/// Per-channel standardization fitted on one segment.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x, Segment segment);
    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Forecasting examples. Univariate mode turns every channel of every window into its
/// own single-channel example; otherwise one example holds all D channels with the
/// target laid out channel-major (d * horizon + h).
objective::SampleSet forecast_samples(const Eigen::MatrixXd& x, const std::vector<Window>& windows,
                                      std::size_t input, std::size_t horizon, bool univariate);

/// Last-value persistence forecast for the same examples, in the same layout.
num::Tensor persistence_forecast(const objective::SampleSet& samples, std::size_t horizon);

}  // namespace factorcast::data
