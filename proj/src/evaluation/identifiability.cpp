#include "factorcast/evaluation/identifiability.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "factorcast/objective/losses.hpp"

namespace factorcast::eval {

IdentifiabilityReport identifiability_score(const Eigen::MatrixXd& recovered, const Eigen::MatrixXd& truth) {
    if (recovered.cols() != truth.cols()) throw std::invalid_argument("recovered and true factors are not time aligned");
    if (recovered.rows() == 0 || truth.rows() == 0) throw std::invalid_argument("identifiability needs factors on both sides");
    const Eigen::Index t = truth.cols();
    const Eigen::Index m = recovered.rows();
    Eigen::MatrixXd x(t, 1 + 2 * m);
    x.col(0).setOnes();
    x.middleCols(1, m) = recovered.transpose();
    x.rightCols(m) = recovered.transpose().array().square().matrix();

    // Scale columns so the rank test is not fooled by units.
    Eigen::VectorXd scale = x.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < scale.size(); ++c) {
        if (!(scale(c) > 0.0)) scale(c) = 1.0;
    }
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xs);

    IdentifiabilityReport r;
    r.rank_deficient = cod.rank() < xs.cols();
    r.map.resize(truth.rows(), 2 * m);
    r.offset.resize(truth.rows());
    for (Eigen::Index f = 0; f < truth.rows(); ++f) {
        const Eigen::VectorXd y = truth.row(f).transpose();
        const Eigen::VectorXd beta = cod.solve(y).cwiseQuotient(scale);
        const Eigen::VectorXd resid = y - x * beta;
        const double centered = (y.array() - y.mean()).square().sum();
        const double score = centered > 0.0 ? 1.0 - resid.squaredNorm() / centered : 0.0;
        r.r2.push_back(std::clamp(score, 0.0, 1.0));
        r.offset(f) = beta(0);
        r.map.row(f) = beta.tail(2 * m).transpose();
    }
    double sum = 0.0;
    for (double v : r.r2) sum += v;
    r.mean = sum / static_cast<double>(r.r2.size());
    return r;
}

Eigen::MatrixXd factor_series(model::Model& model, const Eigen::MatrixXd& series) {
    const auto& cfg = model.config();
    if (static_cast<std::size_t>(series.rows()) != cfg.input_dim) {
        throw std::invalid_argument("series has " + std::to_string(series.rows()) + " channels, model expects " +
                                    std::to_string(cfg.input_dim));
    }
    const auto d = static_cast<std::size_t>(series.rows());
    const auto t = static_cast<std::size_t>(series.cols());
    num::Tensor x(num::Shape{1, d, t});
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < t; ++c) x.data[r * t + c] = series(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (cfg.task == model::TaskKind::LongHorizon) x = objective::batch_normalize(x).first;

    num::Tape tape;
    const auto pass = model.forward(tape, x, {false, 0, false});
    const std::size_t l = cfg.components.factors;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(pass.components.size() * l), static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < pass.components.size(); ++i) {
        const auto& mean = pass.components[i].posterior.mean.value();
        for (std::size_t j = 0; j < l; ++j)
            for (std::size_t c = 0; c < t; ++c) out(static_cast<Eigen::Index>(i * l + j), static_cast<Eigen::Index>(c)) = mean.data[j * t + c];
    }
    return out;
}

Eigen::MatrixXd last_step_factors(model::Model& model, const objective::SampleSet& samples, std::size_t batch_size) {
    const auto& cfg = model.config();
    if (samples.input_dim() != cfg.input_dim) throw std::invalid_argument("samples do not match the model's input width");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    const std::size_t l = cfg.components.factors, t = samples.length();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(cfg.components.count() * l), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t s = 0; s < samples.size(); s += batch_size) {
        std::vector<std::size_t> ids(std::min(batch_size, samples.size() - s));
        std::iota(ids.begin(), ids.end(), s);
        auto batch = samples.gather(ids);
        if (cfg.task == model::TaskKind::LongHorizon) batch.inputs = objective::batch_normalize(batch.inputs).first;
        num::Tape tape;
        const auto pass = model.forward(tape, batch.inputs, {false, 0, false});
        for (std::size_t i = 0; i < pass.components.size(); ++i) {
            const auto& mean = pass.components[i].posterior.mean.value();  // [B,L,T]
            for (std::size_t b = 0; b < ids.size(); ++b)
                for (std::size_t j = 0; j < l; ++j)
                    out(static_cast<Eigen::Index>(i * l + j), static_cast<Eigen::Index>(s + b)) = mean.data[(b * l + j) * t + (t - 1)];
        }
    }
    return out;
}

}  // namespace factorcast::eval
