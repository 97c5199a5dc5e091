#include "factorcast/model/prior.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "factorcast/util/random.hpp"

namespace factorcast::model {

PriorPoint ConditionalPrior::at(std::size_t component, std::size_t factor, std::int64_t time) const noexcept {
    std::uint64_t h = mix64(seed_);
    h = mix64(h ^ static_cast<std::uint64_t>(component));
    h = mix64(h ^ static_cast<std::uint64_t>(factor));
    h = mix64(h ^ static_cast<std::uint64_t>(time));
    const double u1 = unit_interval(h);
    const double u2 = unit_interval(mix64(h));
    return {kPriorMeanLow + (kPriorMeanHigh - kPriorMeanLow) * u1,
            kPriorStdLow + (kPriorStdHigh - kPriorStdLow) * u2};
}

AuxiliaryMatrix AuxiliaryMatrix::build(const num::Tensor& series, std::int64_t first_time) {
    if (series.shape.rank() != 2) throw num::ShapeError("auxiliary matrix needs a [D,T] series");
    const std::size_t d = series.shape[0];
    const std::size_t t = series.shape[1];
    AuxiliaryMatrix aux{num::Tensor(num::Shape{d + 1, t})};
    for (std::size_t c = 0; c < t; ++c) {
        aux.values.at(0, c) = static_cast<double>(first_time + static_cast<std::int64_t>(c));
        for (std::size_t r = 0; r < d; ++r) aux.values.at(r + 1, c) = series.at(r, c);
    }
    return aux;
}

std::int64_t AuxiliaryMatrix::time(std::size_t column) const {
    return static_cast<std::int64_t>(std::llround(values.at(0, column)));
}

std::pair<double, double> natural_parameters(PriorPoint p) noexcept {
    const double var = p.stddev * p.stddev;
    return {p.mean / var, -1.0 / (2.0 * var)};
}

double difference_condition_number(const ConditionalPrior& prior, std::size_t components,
                                   std::size_t factors, std::span<const std::int64_t> times) {
    const std::size_t lk = components * factors;
    if (times.size() != lk + 1) {
        throw std::invalid_argument("condition check needs " + std::to_string(lk + 1) + " points");
    }
    auto stacked = [&](std::int64_t t) {
        Eigen::VectorXd v(2 * lk);
        for (std::size_t i = 0; i < components; ++i) {
            for (std::size_t j = 0; j < factors; ++j) {
                const auto [eta1, eta2] = natural_parameters(prior.at(i, j, t));
                v(2 * (i * factors + j)) = eta1;
                v(2 * (i * factors + j) + 1) = eta2;
            }
        }
        return v;
    };
    Eigen::MatrixXd m(2 * lk, lk);
    Eigen::VectorXd prev = stacked(times[0]);
    for (std::size_t c = 0; c < lk; ++c) {
        Eigen::VectorXd next = stacked(times[c + 1]);
        m.col(static_cast<Eigen::Index>(c)) = next - prev;
        prev = std::move(next);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / smallest;
}

namespace {

std::vector<std::int64_t> spread_points(std::span<const std::int64_t> times, std::size_t count) {
    std::vector<std::int64_t> out;
    out.reserve(count);
    if (times.size() >= count) {
        for (std::size_t m = 0; m < count; ++m) {
            out.push_back(times[count == 1 ? 0 : m * (times.size() - 1) / (count - 1)]);
        }
    } else {
        const std::int64_t start = times.empty() ? 0 : times.front();
        for (std::size_t m = 0; m < count; ++m) out.push_back(start + static_cast<std::int64_t>(m));
    }
    return out;
}

}  // namespace

std::uint64_t checked_prior_seed(std::uint64_t seed, std::size_t components, std::size_t factors,
                                 std::span<const std::int64_t> times) {
    const auto points = spread_points(times, components * factors + 1);
    std::uint64_t candidate = seed;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const double cond = difference_condition_number(ConditionalPrior(candidate), components, factors, points);
        if (cond < kMaxConditionNumber) return candidate;
        candidate = derive_seed(seed, "prior-reseed");
    }
    throw std::runtime_error("prior natural-parameter differences are not invertible for seed " +
                             std::to_string(seed) + " or its reseed");
}

PriorParams prior_params(const AuxiliaryMatrix& aux, std::size_t components, std::size_t factors,
                         std::uint64_t seed) {
    const std::size_t t = aux.length();
    std::vector<std::int64_t> times(t);
    for (std::size_t c = 0; c < t; ++c) times[c] = aux.time(c);

    PriorParams out;
    out.seed_used = checked_prior_seed(seed, components, factors, times);
    const ConditionalPrior prior(out.seed_used);
    out.condition_number = difference_condition_number(prior, components, factors,
                                                       spread_points(times, components * factors + 1));
    out.mean = num::Tensor(num::Shape{components, factors, t});
    out.stddev = num::Tensor(num::Shape{components, factors, t});
    for (std::size_t i = 0; i < components; ++i) {
        for (std::size_t j = 0; j < factors; ++j) {
            for (std::size_t c = 0; c < t; ++c) {
                const PriorPoint p = prior.at(i, j, times[c]);
                out.mean.at(i, j, c) = p.mean;
                out.stddev.at(i, j, c) = p.stddev;
            }
        }
    }
    return out;
}

}  // namespace factorcast::model
