#include <cmath>
#include <numeric>

#include "doctest.h"
#include "factorcast/objective/train.hpp"
#include "../support/kl_oracle.hpp"
#include "../support/model_gradcheck.hpp"
#include "../support/sinusoid_task.hpp"

using namespace factorcast;
using namespace factorcast::objective;
using num::Shape;
using num::Tape;

namespace {

// One component, one factor, one channel, three steps.
struct HandPass {
    Tape tape;
    model::ForwardPass pass;

    HandPass(std::vector<double> x, std::vector<double> xhat, std::vector<double> h, std::vector<double> hhat, double w) {
        model::ComponentPass c;
        c.rate = 1;
        c.factors = tape.constant(Tensor(Shape{1, 1, 3}, std::move(h)));
        c.decoder_w = tape.constant(Tensor(Shape{1, 1}, {w}));
        c.retained = {0, 1, 2};
        c.predicted_at = {0, 1, 2};
        c.predicted = tape.constant(Tensor(Shape{3, 1}, std::move(hhat)));
        pass.components.push_back(c);
        pass.inputs = tape.constant(Tensor(Shape{1, 1, 3}, std::move(x)));
        pass.reconstruction = tape.constant(Tensor(Shape{1, 1, 3}, std::move(xhat)));
        pass.alpha = tape.constant(Tensor(Shape{1, 1}, {1.0}));
    }
};

FitConfig quick_fit(std::size_t epochs) {
    FitConfig f;
    f.epochs = epochs;
    f.patience = epochs;
    f.batch_size = 32;
    f.learning_rate = 3e-3;
    f.seed = 17;
    return f;
}

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("closed-form KL examples") {
    CHECK(kl_gaussian(0.3, 1.7, 0.3, 1.7) == 0.0);
    CHECK(kl_gaussian(1.0, 1.0, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kl_gaussian(0.0, 2.0, 0.0, 1.0) == doctest::Approx(1.5 - std::log(2.0)).epsilon(1e-15));
    CHECK(kl_gaussian(0.0, 2.0, 0.0, 1.0) == doctest::Approx(0.8069).epsilon(1e-4));
    CHECK_THROWS_AS(kl_gaussian(0.0, 0.0, 0.0, 1.0), std::domain_error);
}

TEST_CASE("closed-form KL agrees with sampling") {
    Rng rng(3);
    std::uniform_real_distribution<double> mean(-2.0, 2.0), sd(0.5, 2.0);
    for (int k = 0; k < 10; ++k) {
        const double mq = mean(rng), sq = sd(rng), mp = mean(rng), sp = sd(rng);
        const double exact = kl_gaussian(mq, sq, mp, sp);
        const double mc = testing::kl_monte_carlo(mq, sq, mp, sp, 100000, 100 + k);
        CHECK(std::abs(mc - exact) <= 0.01 * exact);
    }
}

TEST_CASE("tensor KL sums the scalar form") {
    Tape t;
    Var m = t.constant(Tensor(Shape{1, 2}, {1.0, 0.0}));
    Var lv = t.constant(Tensor(Shape{1, 2}, {0.0, 2.0 * std::log(2.0)}));
    const Var kl = kl_gaussian(m, lv, Tensor(Shape{1, 2}, {0.0, 0.0}), Tensor(Shape{1, 2}, {1.0, 1.0}));
    CHECK(kl.value().item() == doctest::Approx(0.5 + 1.5 - std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("reconstruction and prediction losses") {
    Tape t;
    Var a = t.constant(Tensor(Shape{1, 2, 3}, {1, 2, 3, 4, 5, 6}));
    Var b = t.constant(Tensor(Shape{1, 2, 3}, {3, 4, 5, 6, 7, 8}));
    CHECK(reconstruction_loss(a, a).value().item() == 0.0);
    CHECK(reconstruction_loss(a, b).value().item() == 4.0);
    Var p = t.constant(Tensor(Shape{1, 1}, {0.1}));
    Var y = t.constant(Tensor(Shape{1, 1}, {0.3}));
    CHECK(prediction_loss(p, y).value().item() == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(prediction_loss(y, y).value().item() == 0.0);

    Rng rng(8);
    const Tensor u = testing::random_tensor(Shape{7, 5}, rng, -3, 3);
    const Tensor v = testing::random_tensor(Shape{7, 5}, rng, -3, 3);
    double sq = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) sq += (u.data[i] - v.data[i]) * (u.data[i] - v.data[i]);
    const double oracle = sq / static_cast<double>(u.size());
    CHECK(prediction_loss(t.constant(u), t.constant(v)).value().item() == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(reconstruction_loss(t.constant(u), t.constant(v)).value().item() == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("predictability vanishes when the prediction equals the encoding") {
    // X_hat = X and h_hat(t+1) = h(t+1).
    HandPass p({0, 2, -1}, {0, 2, -1}, {0.5, 1.0, -0.5}, {1.0, -0.5, 7.0}, 2.0);
    CHECK(predictability_loss(p.pass).value().item() == 0.0);
}

TEST_CASE("predictability on a hand-built three-step case") {
    // alpha = 1 so each shift carries a factor 2 * w = 4.
    //   t+1 = 1: 1.8 + 4 * (1.5 - 1.0) = 3.8, error 1.8
    //   t+1 = 2: -1.2 + 4 * (0.25 + 0.5) = 1.8, error 2.8
    HandPass p({0, 2, -1}, {0.0, 1.8, -1.2}, {0.5, 1.0, -0.5}, {1.5, 0.25, 9.0}, 2.0);
    CHECK(predictability_loss(p.pass).value().item() == doctest::Approx((1.8 * 1.8 + 2.8 * 2.8) / 2).epsilon(1e-14));
}

TEST_CASE("predictability is zero for a constant series with a matching predictor") {
    HandPass p({3, 3, 3}, {3, 3, 3}, {1.5, 1.5, 1.5}, {1.5, 1.5, 1.5}, 2.0);
    CHECK(predictability_loss(p.pass).value().item() == 0.0);
}

TEST_CASE("total objective weighting") {
    const LossParts zero;
    CHECK(total_objective(zero, {}, 1.0) == 0.0);
    const LossParts ones{1, 1, 1, 1};
    CHECK(total_objective(ones, {}, 1.0) == doctest::Approx(3.5).epsilon(1e-15));
    ObjectiveWeights lh;
    lh.long_horizon = true;
    CHECK(total_objective(ones, lh, 1.0) == doctest::Approx(1.0025).epsilon(1e-15));
    CHECK(total_objective(ones, {}, 0.1) == doctest::Approx(3.05).epsilon(1e-15));
    const LossParts bad{1, 1, std::nan(""), 1};
    CHECK(testing::error_of([&] { total_objective(bad, {}, 1.0); }).find("predictability") != std::string::npos);
    CHECK_THROWS(ObjectiveWeights{.kl = -1}.validate());
}

TEST_CASE("beta schedule stages") {
    const BetaSchedule s;
    CHECK(beta_at(0, s) == 0.1);
    CHECK(beta_at(5, s) == 0.1);
    CHECK(beta_at(19, s) == 0.1);
    CHECK(beta_at(20, s) == 0.5);
    CHECK(beta_at(25, s) == 0.5);
    CHECK(beta_at(30, s) == 1.0);
    CHECK(beta_at(40, s) == 1.0);
    CHECK_THROWS(BetaSchedule{{{0, 0.5}, {10, 0.1}}}.validate());
    CHECK_THROWS(BetaSchedule{{}}.validate());
}

TEST_CASE("batch normalization pair") {
    auto [n, s] = batch_normalize(Tensor(Shape{2, 1, 1}, {0.0, 2.0}));
    CHECK(s.mean == 1.0);
    CHECK(n.data[0] == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(n.data[1] == doctest::Approx(1.0).epsilon(1e-7));

    auto [c, cs] = batch_normalize(Tensor(Shape{3, 1, 2}, std::vector<double>(6, 4.2)));
    for (double v : c.data) CHECK(v == 0.0);
    for (double v : batch_denormalize(c, cs).data) CHECK(v == 4.2);

    Rng rng(4);
    const Tensor x = testing::random_tensor(Shape{4, 3, 5}, rng, -10, 10);
    auto [z, zs] = batch_normalize(x);
    const Tensor back = batch_denormalize(z, zs);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back.data[i] - x.data[i]) < 1e-10);
}

TEST_CASE("a zero weight removes that term's gradient") {
    const auto cfg = testing::tiny_config(model::TaskKind::StockTrend);
    const auto batch = testing::tiny_batch(cfg, 3);
    model::Model m(cfg, 2);
    ObjectiveWeights w;
    w.prediction = 0.0;
    Tape t;
    m.parameters().zero_grad();
    const auto r = evaluate_batch(t, m, batch, w, 1.0, {true, 5, true});
    t.backward(r.total);
    // Only the prediction path reaches the heads.
    for (auto* p : m.group(0, model::Role::Head)) CHECK(testing::abs_max(p->grad) == 0.0);
    for (auto* p : m.group(1, model::Role::Head)) CHECK(testing::abs_max(p->grad) == 0.0);
    double enc = 0.0;
    for (auto* p : m.group(0, model::Role::Encoder)) enc = std::max(enc, testing::abs_max(p->grad));
    CHECK(enc > 0.0);
}

TEST_CASE("fit drives a constant target to zero loss") {
    auto cfg = testing::tiny_config(model::TaskKind::StockTrend);
    SampleSet set(cfg.input_dim, 12, 1);
    const std::vector<double> in(cfg.input_dim * 12, 0.5), target{0.3};
    for (int i = 0; i < 16; ++i) set.add(in, target, i);
    model::Model m(cfg, 5);
    auto f = quick_fit(50);
    f.learning_rate = 2e-2;
    f.batch_size = 8;
    const auto r = fit(m, set, set, f);
    REQUIRE(!r.diverged);
    CHECK(r.history.front().train.prediction > 1e-2);
    CHECK(r.history.back().train.prediction < 1e-3);
    CHECK(r.best_valid < 1e-4);
}

TEST_CASE("fit on a sinusoid mixture halves the validation loss and is deterministic") {
    auto task = testing::sinusoid_task();
    model::Model a(task.config, 3);
    const auto ra = fit(a, task.train, task.valid, quick_fit(8));
    REQUIRE(!ra.diverged);
    REQUIRE(ra.history.size() == 8);
    CHECK(ra.best_valid < 0.5 * ra.history.front().valid.prediction);
    // Same batching as during fit, since inputs are normalized per batch.
    CHECK(evaluate_set(a, task.valid, {}, 32).prediction == doctest::Approx(ra.best_valid).epsilon(1e-12));

    model::Model b(task.config, 3);
    const auto rb = fit(b, task.train, task.valid, quick_fit(8));
    REQUIRE(rb.history.size() == ra.history.size());
    for (std::size_t e = 0; e < ra.history.size(); ++e) {
        CHECK(ra.history[e].train_total == rb.history[e].train_total);
        CHECK(ra.history[e].valid.prediction == rb.history[e].valid.prediction);
    }
}

TEST_CASE("early stopping keeps the best epoch") {
    auto task = testing::sinusoid_task();
    model::Model m(task.config, 4);
    auto f = quick_fit(6);
    f.patience = 1;
    f.learning_rate = 0.5;  // deliberately unstable
    const auto r = fit(m, task.train, task.valid, f);
    REQUIRE(!r.history.empty());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : r.history) best = std::min(best, e.valid.prediction);
    if (!r.diverged) CHECK(r.best_valid == best);
    CHECK(std::isfinite(evaluate_set(m, task.valid, {}, 64).prediction));
}

TEST_CASE("selection picks the total or the final epoch") {
    auto task = testing::sinusoid_task();
    auto f = quick_fit(4);
    f.selection = Selection::Total;
    model::Model a(task.config, 5);
    const auto ra = fit(a, task.train, task.valid, f);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : ra.history) best = std::min(best, e.valid_total);
    CHECK(ra.best_valid == best);

    f.selection = Selection::Final;
    model::Model b(task.config, 5);
    const auto rb = fit(b, task.train, task.valid, f);
    CHECK(rb.best_epoch == rb.history.back().epoch);
    CHECK(rb.best_valid == rb.history.back().valid.prediction);

    CHECK(parse_selection("final") == Selection::Final);
    CHECK(to_string(Selection::Total) == "total");
    CHECK_THROWS_AS(parse_selection("best"), std::invalid_argument);
}

}  // TEST_SUITE
