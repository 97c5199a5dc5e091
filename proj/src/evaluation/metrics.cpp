#include "factorcast/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace factorcast::eval {

ErrorMetrics mse_mae(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size()) {
        throw std::invalid_argument("prediction has " + std::to_string(predicted.size()) + " values but target has " +
                                    std::to_string(target.size()));
    }
    if (predicted.empty()) throw std::invalid_argument("cannot score an empty prediction");
    double sq = 0.0, abs = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - target[i];
        sq += e * e;
        abs += std::abs(e);
    }
    const auto n = static_cast<double>(predicted.size());
    return {sq / n, abs / n};
}

std::vector<ErrorMetrics> per_horizon(const num::Tensor& predicted, const num::Tensor& target, std::size_t horizon) {
    if (!(predicted.shape == target.shape) || predicted.shape.rank() != 2) {
        throw std::invalid_argument("per-horizon scoring needs matching [N, D*H] tensors");
    }
    const std::size_t rows = predicted.shape[0], cols = predicted.shape[1];
    if (horizon == 0 || cols % horizon != 0) throw std::invalid_argument("columns are not a multiple of the horizon");
    std::vector<ErrorMetrics> out(horizon);
    const double n = static_cast<double>(rows * (cols / horizon));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = predicted.at(r, c) - target.at(r, c);
            out[c % horizon].mse += e * e / n;
            out[c % horizon].mae += std::abs(e) / n;
        }
    }
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("correlation needs equal lengths");
    const std::size_t n = a.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> out(values.size());
    for (std::size_t s = 0; s < order.size();) {
        std::size_t e = s;
        while (e + 1 < order.size() && values[order[e + 1]] == values[order[s]]) ++e;
        const double r = 0.5 * static_cast<double>(s + e) + 1.0;
        for (std::size_t k = s; k <= e; ++k) out[order[k]] = r;
        s = e + 1;
    }
    return out;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    return pearson(ra, rb);
}

std::vector<CrossSection> group_by_day(std::span<const std::size_t> day, std::span<const double> predicted,
                                       std::span<const double> realized) {
    if (day.size() != predicted.size() || day.size() != realized.size()) {
        throw std::invalid_argument("day, prediction and realized arrays differ in length");
    }
    std::map<std::size_t, CrossSection> by_day;
    for (std::size_t i = 0; i < day.size(); ++i) {
        auto& cs = by_day[day[i]];
        cs.predicted.push_back(predicted[i]);
        cs.realized.push_back(realized[i]);
    }
    std::vector<CrossSection> out;
    out.reserve(by_day.size());
    for (auto& [d, cs] : by_day) out.push_back(std::move(cs));
    return out;
}

CorrelationReport ic_rank_ic(std::span<const CrossSection> days) {
    std::vector<double> ic, ric;
    CorrelationReport r;
    for (const auto& d : days) {
        if (d.predicted.size() != d.realized.size()) throw std::invalid_argument("cross-section sizes differ");
        const double p = pearson(d.predicted, d.realized);
        const double s = spearman(d.predicted, d.realized);
        if (!std::isfinite(p) || !std::isfinite(s)) {
            ++r.days_skipped;
            continue;
        }
        ic.push_back(p);
        ric.push_back(s);
    }
    r.days_used = ic.size();
    const auto a = mean_std(ic);
    const auto b = mean_std(ric);
    r.ic = a.mean;
    r.ic_std = a.std;
    r.rank_ic = b.mean;
    r.rank_ic_std = b.std;
    return r;
}

PrecisionReport precision_at_n(std::span<const CrossSection> days, std::size_t n) {
    if (n == 0) throw std::invalid_argument("precision needs N >= 1");
    PrecisionReport r;
    double sum = 0.0;
    for (const auto& d : days) {
        if (d.predicted.size() < n) {
            ++r.days_skipped;
            continue;
        }
        std::vector<std::size_t> order(d.predicted.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d.predicted[i] > d.predicted[j]; });
        std::size_t hits = 0;
        for (std::size_t k = 0; k < n; ++k) hits += d.realized[order[k]] > 0.0;
        sum += static_cast<double>(hits) / static_cast<double>(n);
        ++r.days_used;
    }
    r.percent = r.days_used > 0 ? 100.0 * sum / static_cast<double>(r.days_used) : 0.0;
    return r;
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd m;
    if (values.empty()) return m;
    const auto n = static_cast<double>(values.size());
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.std = std::sqrt(ss / (n - 1.0));
    }
    return m;
}

}  // namespace factorcast::eval
