#include "factorcast/data/windows.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace factorcast::data {

void SplitRatios::validate() const {
    if (train < 0 || valid < 0 || test < 0) throw std::invalid_argument("split ratios must be nonnegative");
    if (std::abs(train + valid + test - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

Splits chronological_split(std::size_t length, const SplitRatios& ratios) {
    ratios.validate();
    const double t = static_cast<double>(length);
    // The small offset keeps products such as 0.7 * 10 from rounding down.
    const auto train = static_cast<std::size_t>(std::floor(t * ratios.train + 1e-9));
    const auto test = static_cast<std::size_t>(std::floor(t * ratios.test + 1e-9));
    if (train + test > length) throw std::invalid_argument("split ratios exceed the series length");
    Splits s{{0, train}, {train, length - test}, {length - test, length}};
    const char* names[] = {"train", "valid", "test"};
    const Segment* segs[] = {&s.train, &s.valid, &s.test};
    for (int i = 0; i < 3; ++i) {
        if (segs[i]->size() == 0) {
            throw std::invalid_argument(std::string("empty ") + names[i] + " split for length " + std::to_string(length));
        }
    }
    return s;
}

SeriesMatrix slice_columns(const SeriesMatrix& series, Segment segment) {
    if (segment.end > series.length() || segment.begin > segment.end) throw std::out_of_range("segment outside the series");
    SeriesMatrix out;
    out.values = series.values.middleCols(static_cast<Eigen::Index>(segment.begin), static_cast<Eigen::Index>(segment.size()));
    if (!series.timestamps.empty()) {
        out.timestamps.assign(series.timestamps.begin() + static_cast<long>(segment.begin),
                              series.timestamps.begin() + static_cast<long>(segment.end));
    }
    out.names = series.names;
    out.frequency = series.frequency;
    return out;
}

std::vector<Window> make_windows(std::size_t length, std::size_t input, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
    if (input == 0) throw std::invalid_argument("input length must be at least 1");
    if (input + horizon > length) {
        throw std::invalid_argument("segment of length " + std::to_string(length) + " is shorter than one window of " +
                                    std::to_string(input) + " + " + std::to_string(horizon));
    }
    std::vector<Window> out;
    for (std::size_t s = 0; s + input + horizon <= length; ++s) out.push_back({s, s + input});
    return out;
}

std::vector<Window> segment_windows(Segment segment, std::size_t input, std::size_t horizon, bool allow_context) {
    if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
    if (input == 0) throw std::invalid_argument("input length must be at least 1");
    const std::size_t first = allow_context ? std::max(segment.begin, input) : segment.begin + input;
    std::vector<Window> out;
    for (std::size_t t = first; t + horizon <= segment.end; ++t) out.push_back({t - input, t});
    if (out.empty()) {
        throw std::invalid_argument("segment [" + std::to_string(segment.begin) + ", " + std::to_string(segment.end) +
                                    ") holds no window of input " + std::to_string(input) + " and horizon " +
                                    std::to_string(horizon));
    }
    return out;
}

Eigen::MatrixXd pad_for_dilation(const Eigen::MatrixXd& x, std::size_t kernel, std::size_t rate) {
    const auto pad = static_cast<Eigen::Index>((kernel > 0 ? kernel - 1 : 0) * rate);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols() + pad);
    out.rightCols(x.cols()) = x;
    return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x, Segment segment) {
    if (segment.size() == 0 || segment.end > static_cast<std::size_t>(x.cols())) {
        throw std::invalid_argument("cannot fit a standardizer on an empty segment");
    }
    const Eigen::MatrixXd block = x.middleCols(static_cast<Eigen::Index>(segment.begin), static_cast<Eigen::Index>(segment.size()));
    Standardizer s;
    s.mean = block.rowwise().mean();
    s.scale = ((block.colwise() - s.mean).array().square().rowwise().mean()).sqrt().matrix();
    for (Eigen::Index r = 0; r < s.scale.size(); ++r) {
        if (!(s.scale(r) > 1e-12)) s.scale(r) = 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return ((x.colwise() - mean).array().colwise() / scale.array()).matrix();
}

objective::SampleSet forecast_samples(const Eigen::MatrixXd& x, const std::vector<Window>& windows,
                                      std::size_t input, std::size_t horizon, bool univariate) {
    const auto d = static_cast<std::size_t>(x.rows());
    const auto cols = static_cast<std::size_t>(x.cols());
    objective::SampleSet set(univariate ? 1 : d, input, univariate ? horizon : d * horizon);
    std::vector<double> in, target;
    for (const Window& w : windows) {
        if (w.target_begin != w.input_begin + input || w.target_begin + horizon > cols) {
            throw std::invalid_argument("window does not fit the series");
        }
        const auto start = static_cast<std::int64_t>(w.input_begin);
        if (univariate) {
            for (std::size_t r = 0; r < d; ++r) {
                in.clear();
                target.clear();
                for (std::size_t t = 0; t < input; ++t) in.push_back(x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w.input_begin + t)));
                for (std::size_t h = 0; h < horizon; ++h) target.push_back(x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w.target_begin + h)));
                set.add(in, target, start);
            }
        } else {
            in.clear();
            target.clear();
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t t = 0; t < input; ++t) in.push_back(x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w.input_begin + t)));
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t h = 0; h < horizon; ++h) target.push_back(x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w.target_begin + h)));
            set.add(in, target, start);
        }
    }
    return set;
}

num::Tensor persistence_forecast(const objective::SampleSet& samples, std::size_t horizon) {
    const std::size_t d = samples.input_dim();
    const std::size_t len = samples.length();
    if (samples.target_size() != d * horizon) throw std::invalid_argument("horizon does not match the sample targets");
    num::Tensor out(num::Shape{samples.size(), samples.target_size()});
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto in = samples.input(i);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t h = 0; h < horizon; ++h) out.at(i, r * horizon + h) = in[r * len + len - 1];
    }
    return out;
}

}  // namespace factorcast::data
