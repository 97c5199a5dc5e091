#include "factorcast/evaluation/predictability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace factorcast::eval {

namespace {

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

GapStats gap_stats(std::vector<double> values) {
    GapStats s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.median = quantile(values, 0.5);
    s.q90 = quantile(values, 0.9);
    s.max = values.back();
    return s;
}

void GapAccumulator::add(const model::ForwardPass& pass) {
    const auto& x = pass.inputs.value();
    const auto& xhat = pass.reconstruction.value();
    const auto& alpha = pass.alpha.value();
    const std::size_t batch = x.shape[0], d = x.shape[1], t_len = x.shape[2];
    const std::size_t k = pass.components.size();
    if (comps.empty()) comps.resize(k);

    for (std::size_t i = 0; i < k; ++i) {
        const auto& comp = pass.components[i];
        Lists& out = comps[i];
        out.rate = comp.rate;
        const auto& h = comp.factors.value();       // [B,L,T]
        const auto& hhat = comp.predicted.value();  // [B*n,L]
        const auto& w = comp.decoder_w.value();     // [D,L]
        const std::size_t l = h.shape[1];
        const std::size_t n = comp.predicted_at.size();

        Eigen::MatrixXd wm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(l));
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < l; ++c) wm(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w.at(r, c);
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(wm);
        // Zero singular values are implicit when L exceeds D.
        const double smin_w = l > d ? 0.0 : svd.singularValues().minCoeff();

        for (std::size_t b = 0; b < batch; ++b) {
            const double weight = alpha.at(b, i) + 1.0;
            const double smin = weight * smin_w;
            if (out.min_singular < 0 || smin < out.min_singular) out.min_singular = smin;
            for (std::size_t m = 0; m < n; ++m) {
                const auto t = static_cast<std::size_t>(comp.predicted_at[m]) + 1;
                if (t >= t_len) continue;
                Eigen::VectorXd diff(static_cast<Eigen::Index>(l)), next(static_cast<Eigen::Index>(l));
                for (std::size_t j = 0; j < l; ++j) {
                    next(static_cast<Eigen::Index>(j)) = h.data[(b * l + j) * t_len + t];
                    diff(static_cast<Eigen::Index>(j)) = hhat.at(b * n + m, j) - next(static_cast<Eigen::Index>(j));
                }
                out.target.push_back(next);
                const Eigen::VectorXd shift = weight * (wm * diff);
                double pe = 0.0, ee = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    const double rec = xhat.data[(b * d + r) * t_len + t] - x.data[(b * d + r) * t_len + t];
                    ee += rec * rec;
                    pe += (rec + shift(static_cast<Eigen::Index>(r))) * (rec + shift(static_cast<Eigen::Index>(r)));
                }
                const double gap = diff.norm();
                pe = std::sqrt(pe);
                ee = std::sqrt(ee);
                out.gap.push_back(gap);
                out.pred.push_back(pe);
                out.enc.push_back(ee);
                if (smin > 0.0) {
                    ++out.bound_checked;
                    const double bound = (pe + ee) / smin;
                    if (gap > bound * (1.0 + 1e-9) + 1e-12) ++out.bound_violations;
                }
                if (pe < check.tau1 && ee < check.tau2) {
                    ++out.dual_within;
                    if (smin > 0.0 && gap <= (check.tau1 + check.tau2) / smin) ++out.dual_bound_held;
                }
            }
        }
    }
}

std::vector<ComponentGap> GapAccumulator::finish() const {
    std::vector<ComponentGap> out;
    for (const auto& c : comps) {
        ComponentGap g;
        g.rate = c.rate;
        g.gap = gap_stats(c.gap);
        if (!c.target.empty()) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(c.target.front().size());
            for (const auto& v : c.target) mean += v;
            mean /= static_cast<double>(c.target.size());
            double ss = 0.0;
            for (const auto& v : c.target) ss += (v - mean).squaredNorm();
            const double rms = std::sqrt(ss / static_cast<double>(c.target.size()));
            std::vector<double> rel(c.gap);
            for (double& v : rel) v = rms > 0.0 ? v / rms : 0.0;
            g.relative_gap = gap_stats(std::move(rel));
        }
        g.pred_error = gap_stats(c.pred);
        g.enc_error = gap_stats(c.enc);
        g.within_tau = static_cast<std::size_t>(std::count_if(c.gap.begin(), c.gap.end(), [&](double v) { return v < check.tau; }));
        g.dual_within = c.dual_within;
        g.dual_bound_held = c.dual_bound_held;
        g.bound_checked = c.bound_checked;
        g.bound_violations = c.bound_violations;
        g.min_singular = std::max(0.0, c.min_singular);
        out.push_back(g);
    }
    return out;
}

std::vector<ComponentGap> predictability_gap(model::Model& model, const objective::SampleSet& held_out,
                                             const PredictabilityCheck& check, std::size_t batch_size) {
    if (held_out.empty()) throw std::invalid_argument("predictability check needs held-out samples");
    GapAccumulator acc(check);
    const model::ForwardOptions options{false, 0, false};
    for (std::size_t s = 0; s < held_out.size(); s += batch_size) {
        std::vector<std::size_t> ids(std::min(batch_size, held_out.size() - s));
        std::iota(ids.begin(), ids.end(), s);
        num::Tape tape;
        const auto r = objective::evaluate_batch(tape, model, held_out.gather(ids), {}, 0.0, options);
        acc.add(r.pass);
    }
    return acc.finish();
}

}  // namespace factorcast::eval
