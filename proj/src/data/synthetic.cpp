#include "factorcast/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "factorcast/model/prior.hpp"
#include "factorcast/util/random.hpp"

namespace factorcast::data {

IdentifiableData generate_identifiable(const IdentifiableConfig& config, std::uint64_t seed) {
    const std::size_t lk = config.components * config.factors;
    if (lk == 0 || config.length == 0) throw std::invalid_argument("identifiable data needs factors and length");
    if (config.dims < lk) throw std::invalid_argument("an injective mix needs dims >= components * factors");
    if (config.identity_mix && config.dims != lk) throw std::invalid_argument("identity mix needs dims == components * factors");
    if (config.noise < 0) throw std::invalid_argument("noise must be nonnegative");

    const auto t_len = static_cast<Eigen::Index>(config.length);
    const auto d = static_cast<Eigen::Index>(config.dims);
    IdentifiableData out;
    SyntheticTruth& truth = out.truth;

    Rng factor_rng(derive_seed(seed, "factors"));
    std::normal_distribution<double> normal(0.0, 1.0);
    const model::ConditionalPrior prior(config.prior_seed);
    truth.factors.resize(static_cast<Eigen::Index>(lk), t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        for (std::size_t i = 0; i < config.components; ++i) {
            for (std::size_t j = 0; j < config.factors; ++j) {
                const auto p = prior.at(i, j, t);
                truth.factors(static_cast<Eigen::Index>(i * config.factors + j), t) = p.mean + p.stddev * normal(factor_rng);
            }
        }
    }

    if (config.identity_mix) {
        truth.mixing = Eigen::MatrixXd::Identity(d, d);
        truth.offset = Eigen::VectorXd::Zero(d);
    } else {
        Rng mix_rng(derive_seed(seed, "mixing"));
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        // Redraw until the mix is comfortably injective.
        for (int attempt = 0;; ++attempt) {
            truth.mixing = Eigen::MatrixXd::NullaryExpr(d, static_cast<Eigen::Index>(lk), [&] { return normal(mix_rng); });
            const Eigen::JacobiSVD<Eigen::MatrixXd> svd(truth.mixing);
            const auto& s = svd.singularValues();
            if (s(s.size() - 1) > 0.2 * s(0) || attempt > 100) break;
        }
        truth.offset = Eigen::VectorXd::NullaryExpr(d, [&] { return uniform(mix_rng); });
    }

    Rng noise_rng(derive_seed(seed, "noise"));
    truth.noise = Eigen::MatrixXd::NullaryExpr(d, t_len, [&] { return config.noise * normal(noise_rng); });
    if (config.noise == 0.0) truth.noise.setZero();

    out.series.values = (truth.mixing * truth.factors).colwise() + truth.offset;
    out.series.values += truth.noise;
    for (Eigen::Index t = 0; t < t_len; ++t) out.series.timestamps.push_back(std::to_string(t));
    for (Eigen::Index r = 0; r < d; ++r) out.series.names.push_back("x" + std::to_string(r));
    out.series.frequency = "unknown";
    return out;
}

SeriesMatrix generate_sinusoid_mixture(const SinusoidConfig& config, std::uint64_t seed) {
    if (config.dims == 0 || config.length == 0 || config.periods.empty()) {
        throw std::invalid_argument("sinusoid mixture needs channels, length and periods");
    }
    Rng rng(derive_seed(seed, "sinusoid"));
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> normal(0.0, 1.0);

    SeriesMatrix out;
    const auto d = static_cast<Eigen::Index>(config.dims);
    const auto t_len = static_cast<Eigen::Index>(config.length);
    out.values = Eigen::MatrixXd::Zero(d, t_len);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (double period : config.periods) {
            const double a = amp(rng), p = phase(rng);
            for (Eigen::Index t = 0; t < t_len; ++t) {
                out.values(r, t) += a * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + p);
            }
        }
    }
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index t = 0; t < t_len; ++t) out.values(r, t) += config.noise * normal(rng);

    const double start = parse_timestamp("2020-01-01 00:00:00");
    for (Eigen::Index t = 0; t < t_len; ++t) out.timestamps.push_back(format_timestamp(start + 3600.0 * static_cast<double>(t)));
    for (Eigen::Index r = 0; r < d; ++r) out.names.push_back("s" + std::to_string(r));
    out.frequency = "1h";
    return out;
}

}  // namespace factorcast::data
