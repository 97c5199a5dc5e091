#include "factorcast/objective/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "factorcast/numerics/optimizer.hpp"
#include "factorcast/util/random.hpp"

namespace factorcast::objective {

using num::Shape;

SampleSet::SampleSet(std::size_t input_dim, std::size_t length, std::size_t target_size)
    : input_dim_(input_dim), length_(length), target_size_(target_size) {}

void SampleSet::add(std::span<const double> input, std::span<const double> target, std::int64_t start_time) {
    if (input.size() != input_dim_ * length_ || target.size() != target_size_) {
        throw num::ShapeError("sample of " + std::to_string(input.size()) + " inputs and " +
                              std::to_string(target.size()) + " targets does not fit the set");
    }
    inputs_.insert(inputs_.end(), input.begin(), input.end());
    targets_.insert(targets_.end(), target.begin(), target.end());
    start_time_.push_back(start_time);
}

std::span<const double> SampleSet::input(std::size_t i) const {
    return {inputs_.data() + i * input_dim_ * length_, input_dim_ * length_};
}

std::span<const double> SampleSet::target(std::size_t i) const {
    return {targets_.data() + i * target_size_, target_size_};
}

Batch SampleSet::gather(std::span<const std::size_t> ids) const {
    Batch b;
    b.inputs = Tensor(Shape{ids.size(), input_dim_, length_});
    b.targets = Tensor(Shape{ids.size(), target_size_});
    const std::size_t in = input_dim_ * length_;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const std::size_t i = ids[r];
        if (i >= size()) throw std::out_of_range("sample index out of range");
        std::copy_n(inputs_.begin() + static_cast<long>(i * in), in, b.inputs.data.begin() + static_cast<long>(r * in));
        std::copy_n(targets_.begin() + static_cast<long>(i * target_size_), target_size_,
                    b.targets.data.begin() + static_cast<long>(r * target_size_));
        b.start_time.push_back(start_time_[i]);
    }
    return b;
}

BatchResult evaluate_batch(num::Tape& tape, model::Model& model, const Batch& batch,
                           const ObjectiveWeights& weights, double beta, const model::ForwardOptions& options) {
    const bool long_horizon = model.config().task == model::TaskKind::LongHorizon;
    ObjectiveWeights w = weights;
    w.long_horizon = long_horizon;

    BatchResult out;
    BatchStats stats;
    if (long_horizon) {
        auto [normalized, s] = batch_normalize(batch.inputs);
        stats = s;
        out.pass = model.forward(tape, normalized, options);
    } else {
        out.pass = model.forward(tape, batch.inputs, options);
    }
    Var prediction = long_horizon ? batch_denormalize(out.pass.prediction, stats) : out.pass.prediction;
    Var target = tape.constant(batch.targets);

    out.prediction_term = prediction_loss(prediction, target);
    Var rec = reconstruction_loss(out.pass.reconstruction, out.pass.inputs);
    Var predy = predictability_loss(out.pass);
    Var kl = factor_kl(out.pass, model.prior(), batch.start_time);
    out.total = total_objective(out.prediction_term, rec, predy, kl, w, beta);

    out.parts = {out.prediction_term.value().item(), rec.value().item(), predy.value().item(), kl.value().item()};
    out.total_value = out.total.value().item();
    out.prediction = prediction.value();
    return out;
}

namespace {

std::vector<std::vector<std::size_t>> sequential_batches(const SampleSet& set, std::size_t batch_size) {
    if (!set.groups.empty()) return set.groups;
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < set.size(); s += batch_size) {
        std::vector<std::size_t> ids(std::min(batch_size, set.size() - s));
        std::iota(ids.begin(), ids.end(), s);
        out.push_back(std::move(ids));
    }
    return out;
}

std::vector<std::vector<std::size_t>> shuffled_batches(const SampleSet& set, std::size_t batch_size, Rng& rng) {
    if (!set.groups.empty()) {
        auto groups = set.groups;
        std::shuffle(groups.begin(), groups.end(), rng);
        return groups;
    }
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < order.size(); s += batch_size) {
        const auto end = std::min(order.size(), s + batch_size);
        out.emplace_back(order.begin() + static_cast<long>(s), order.begin() + static_cast<long>(end));
    }
    return out;
}

void accumulate(LossParts& sum, const LossParts& p, double w) {
    sum.prediction += w * p.prediction;
    sum.reconstruction += w * p.reconstruction;
    sum.predictability += w * p.predictability;
    sum.kl += w * p.kl;
}

LossParts scaled(LossParts p, double s) {
    p.prediction *= s;
    p.reconstruction *= s;
    p.predictability *= s;
    p.kl *= s;
    return p;
}

bool finite(const LossParts& p) {
    return std::isfinite(p.prediction) && std::isfinite(p.reconstruction) && std::isfinite(p.predictability) &&
           std::isfinite(p.kl);
}

}  // namespace

LossParts evaluate_set(model::Model& model, const SampleSet& set, const ObjectiveWeights& weights,
                       std::size_t batch_size) {
    if (set.empty()) throw std::invalid_argument("cannot evaluate an empty sample set");
    LossParts sum;
    std::size_t count = 0;
    const model::ForwardOptions options{false, 0, false};
    for (const auto& ids : sequential_batches(set, batch_size)) {
        num::Tape tape;
        const BatchResult r = evaluate_batch(tape, model, set.gather(ids), weights, 0.0, options);
        accumulate(sum, r.parts, static_cast<double>(ids.size()));
        count += ids.size();
    }
    return scaled(sum, 1.0 / static_cast<double>(count));
}

Tensor predict(model::Model& model, const SampleSet& set, std::size_t batch_size) {
    Tensor out(Shape{set.size(), set.target_size()});
    const model::ForwardOptions options{false, 0, false};
    for (const auto& ids : sequential_batches(set, batch_size)) {
        num::Tape tape;
        const BatchResult r = evaluate_batch(tape, model, set.gather(ids), {}, 0.0, options);
        for (std::size_t row = 0; row < ids.size(); ++row) {
            for (std::size_t c = 0; c < set.target_size(); ++c) out.at(ids[row], c) = r.prediction.at(row, c);
        }
    }
    return out;
}

std::string to_string(Selection s) {
    switch (s) {
        case Selection::Prediction: return "prediction";
        case Selection::Total: return "total";
        case Selection::Final: return "final";
    }
    return "prediction";
}

Selection parse_selection(const std::string& text) {
    if (text == "prediction") return Selection::Prediction;
    if (text == "total") return Selection::Total;
    if (text == "final") return Selection::Final;
    throw std::invalid_argument("unknown selection '" + text + "' (expected prediction, total or final)");
}

FitResult fit(model::Model& model, const SampleSet& train, const SampleSet& valid, const FitConfig& config) {
    if (train.empty() || valid.empty()) throw std::invalid_argument("training needs nonempty train and valid sets");
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    config.weights.validate();
    config.schedule.validate();

    num::Adam adam(num::AdamOptions{config.learning_rate});
    auto params = model.parameters().pointers();
    num::ParameterSet best = model.parameters();
    Rng shuffle_rng(derive_seed(config.seed, "shuffle"));

    FitResult result;
    result.best_valid = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    double best_prediction = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.beta = beta_at(epoch, config.schedule);
        LossParts sum;
        double total_sum = 0.0;
        std::size_t count = 0;
        try {
            const auto batches = shuffled_batches(train, config.batch_size, shuffle_rng);
            for (std::size_t b = 0; b < batches.size(); ++b) {
                model.parameters().zero_grad();
                num::Tape tape;
                const model::ForwardOptions options{
                    true, derive_seed(config.seed, "noise-" + std::to_string(epoch) + "-" + std::to_string(b)), true};
                const BatchResult r =
                    evaluate_batch(tape, model, train.gather(batches[b]), config.weights, rec.beta, options);
                tape.backward(r.total);
                const auto step = adam.step(params);
                if (!step.applied && result.message.empty()) result.message = step.warning;
                const double w = static_cast<double>(batches[b].size());
                accumulate(sum, r.parts, w);
                total_sum += w * r.total_value;
                count += batches[b].size();
            }
            rec.train = scaled(sum, 1.0 / static_cast<double>(count));
            rec.train_total = total_sum / static_cast<double>(count);
            rec.valid = evaluate_set(model, valid, config.weights, config.batch_size);
            ObjectiveWeights w = config.weights;
            w.long_horizon = model.config().task == model::TaskKind::LongHorizon;
            rec.valid_total = total_objective(rec.valid, w, rec.beta);
            if (!finite(rec.train) || !std::isfinite(rec.train_total)) throw std::domain_error("non-finite training loss");
        } catch (const std::domain_error& e) {
            result.diverged = true;
            result.message = "training diverged at epoch " + std::to_string(epoch) + ": " + e.what() +
                             "; restored parameters from epoch " + std::to_string(result.best_epoch);
            break;
        }

        result.history.push_back(rec);
        if (config.on_epoch) config.on_epoch(rec);
        const double score = config.selection == Selection::Total ? rec.valid_total : rec.valid.prediction;
        const bool improved = rec.valid.prediction < best_prediction;
        if (improved) best_prediction = rec.valid.prediction;
        if (config.selection == Selection::Final || score < result.best_valid) {
            result.best_valid = score;
            result.best_epoch = epoch;
            best.assign(model.parameters());
        }
        since_best = improved ? 0 : since_best + 1;
        if (since_best >= config.patience) break;
    }
    model.parameters().assign(best);
    return result;
}

void write_loss_history(const std::filesystem::path& path, std::span<const EpochRecord> history) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write loss history " + path.string());
    os << "epoch,beta,train_total,train_prediction,train_reconstruction,train_predictability,train_kl,"
          "valid_total,valid_prediction,valid_reconstruction,valid_predictability,valid_kl\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        os << buf;
    };
    for (const auto& r : history) {
        os << r.epoch;
        put(r.beta);
        put(r.train_total);
        put(r.train.prediction);
        put(r.train.reconstruction);
        put(r.train.predictability);
        put(r.train.kl);
        put(r.valid_total);
        put(r.valid.prediction);
        put(r.valid.reconstruction);
        put(r.valid.predictability);
        put(r.valid.kl);
        os << '\n';
    }
}

}  // namespace factorcast::objective
