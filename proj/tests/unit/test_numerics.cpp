#include <cmath>
#include <sstream>

#include "doctest.h"
#include "factorcast/numerics/checkpoint.hpp"
#include "factorcast/numerics/ops.hpp"
#include "factorcast/numerics/optimizer.hpp"
#include "../support/gradcheck.hpp"

using namespace factorcast;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Var;
using testing::max_gradient_error;
using testing::random_tensor;

TEST_SUITE("numerics") {

TEST_CASE("causal conv with unit kernel is a running sum") {
    Tape tape;
    Var x = tape.constant(Tensor(Shape{1, 1, 3}, {1, 2, 3}));
    Var w = tape.constant(Tensor(Shape{1, 1, 3}, {1, 1, 1}));
    Var y = num::conv1d(x, w, Var{}, 1);
    CHECK(y.value().data == std::vector<double>{1, 3, 6});
}

TEST_CASE("dilated conv reads t, t-r, t-2r") {
    Tape tape;
    Tensor xs(Shape{1, 1, 12});
    for (std::size_t t = 0; t < 12; ++t) xs.data[t] = std::pow(2.0, static_cast<double>(t));
    Var x = tape.constant(xs);
    // Oldest tap first: weights 100, 10, 1 on t-10, t-5, t.
    Var w = tape.constant(Tensor(Shape{1, 1, 3}, {100, 10, 1}));
    Var y = num::conv1d(x, w, Var{}, 5);
    for (std::size_t t = 0; t < 12; ++t) {
        double expect = xs.data[t];
        if (t >= 5) expect += 10 * xs.data[t - 5];
        if (t >= 10) expect += 100 * xs.data[t - 10];
        CHECK(y.value().data[t] == doctest::Approx(expect));
    }
}

TEST_CASE("softmax, frobenius and reductions") {
    Tape tape;
    Var s = num::softmax(tape.constant(Tensor::vector({0, 0})));
    CHECK(s.value().data[0] == doctest::Approx(0.5));
    CHECK(s.value().data[1] == doctest::Approx(0.5));
    Var f = num::frobenius(tape.constant(Tensor(Shape{2, 2}, 1.0)));
    CHECK(f.value().item() == doctest::Approx(2.0));
    Var m = num::mean(tape.constant(Tensor::vector({1, 2, 3, 6})));
    CHECK(m.value().item() == doctest::Approx(3.0));
}

TEST_CASE("product rule and tanh at zero") {
    Tape tape;
    Var x = tape.variable(Tensor::scalar(2));
    Var y = tape.variable(Tensor::scalar(3));
    tape.backward(x * y);
    CHECK(x.grad().item() == doctest::Approx(3));
    CHECK(y.grad().item() == doctest::Approx(2));

    Tape t2;
    Var z = t2.variable(Tensor(Shape{4}, 0.0));
    t2.backward(num::sum(num::tanh(z)));
    for (double g : z.grad().data) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("repeated backward accumulates into leaves") {
    Tape tape;
    Var x = tape.variable(Tensor::scalar(1.5));
    Var y = num::square(x);
    tape.backward(y);
    tape.backward(y);
    CHECK(x.grad().item() == doctest::Approx(6.0));
}

TEST_CASE("non-scalar root and shape mismatch are rejected") {
    Tape tape;
    Var a = tape.variable(Tensor(Shape{2}, 1.0));
    Var b = tape.variable(Tensor(Shape{3}, 1.0));
    CHECK_THROWS_AS(tape.backward(a), std::invalid_argument);
    CHECK_THROWS_AS(num::add(a, b), num::ShapeError);
    CHECK_THROWS_AS(num::matmul(tape.constant(Tensor(Shape{2, 3})), tape.constant(Tensor(Shape{2, 3}))),
                    num::ShapeError);
}

TEST_CASE("non-finite values are caught at node creation") {
    Tape tape;
    CHECK_THROWS_AS(tape.constant(Tensor::scalar(std::nan(""))), num::NonFiniteError);
    Var zero = tape.constant(Tensor::scalar(0.0));
    CHECK_THROWS_AS(num::log(zero), num::NonFiniteError);
    CHECK_THROWS_AS(num::exp(tape.constant(Tensor::scalar(1e6))), num::NonFiniteError);
}

TEST_CASE("every primitive matches finite differences") {
    std::mt19937_64 rng(11);
    using V = std::vector<Var>;
    auto check = [&](const char* name, testing::Graph g, std::vector<Tensor> in) {
        CAPTURE(name);
        CHECK(max_gradient_error(g, std::move(in)) < 1e-4);
    };
    const Shape s23{2, 3};
    check("add", [](Tape&, const V& v) { return num::sum(num::square(v[0] + v[1])); },
          {random_tensor(s23, rng), random_tensor(s23, rng)});
    check("sub", [](Tape&, const V& v) { return num::sum(num::square(v[0] - v[1])); },
          {random_tensor(s23, rng), random_tensor(s23, rng)});
    check("mul", [](Tape&, const V& v) { return num::sum(v[0] * v[1] * v[0]); },
          {random_tensor(s23, rng), random_tensor(s23, rng)});
    check("scale/add_scalar", [](Tape&, const V& v) { return num::sum(num::square(2.5 * v[0] + 0.3)); },
          {random_tensor(s23, rng)});
    check("matmul", [](Tape&, const V& v) { return num::sum(num::square(num::matmul(v[0], v[1]))); },
          {random_tensor(s23, rng), random_tensor(Shape{3, 4}, rng)});
    check("affine", [](Tape&, const V& v) { return num::sum(num::square(num::affine(v[0], v[1], v[2]))); },
          {random_tensor(s23, rng), random_tensor(Shape{3, 4}, rng), random_tensor(Shape{4}, rng)});
    check("conv1d", [](Tape&, const V& v) { return num::sum(num::square(num::conv1d(v[0], v[1], v[2], 2))); },
          {random_tensor(Shape{2, 2, 7}, rng), random_tensor(Shape{3, 2, 3}, rng), random_tensor(Shape{3}, rng)});
    check("tanh/sigmoid", [](Tape&, const V& v) { return num::sum(num::tanh(v[0]) * num::sigmoid(v[0])); },
          {random_tensor(s23, rng, -2, 2)});
    check("exp/log", [](Tape&, const V& v) { return num::sum(num::log(num::exp(v[0]) + 1.0)); },
          {random_tensor(s23, rng)});
    check("sqrt", [](Tape&, const V& v) { return num::sum(num::sqrt(v[0])); }, {random_tensor(s23, rng, 0.5, 2)});
    check("neg/relu", [](Tape&, const V& v) { return num::sum(num::square(num::relu(-v[0]))); },
          {random_tensor(s23, rng)});
    check("softmax", [](Tape& t, const V& v) {
        return num::sum(num::softmax(v[0]) * t.constant(Tensor(Shape{2, 3}, {1, 2, 3, -1, 0, 4})));
    }, {random_tensor(s23, rng)});
    check("mean/frobenius", [](Tape&, const V& v) { return num::mean(v[0]) + num::frobenius(v[0]); },
          {random_tensor(s23, rng)});
    check("concat/slice", [](Tape&, const V& v) {
        Var parts[] = {v[0], v[1]};
        Var c = num::concat(parts, 1);
        return num::sum(num::square(num::slice(c, 1, 1, 5)));
    }, {random_tensor(s23, rng), random_tensor(s23, rng)});
    check("reshape/permute", [](Tape&, const V& v) {
        Var p = num::permute(num::reshape(v[0], Shape{2, 3, 2}), {2, 0, 1});
        return num::sum(num::square(p) * num::reshape(v[1], Shape{2, 2, 3}));
    }, {random_tensor(Shape{12}, rng), random_tensor(Shape{12}, rng)});
    check("transpose", [](Tape&, const V& v) { return num::sum(num::square(num::matmul(num::transpose(v[0]), v[0]))); },
          {random_tensor(s23, rng)});
    check("take_columns", [](Tape&, const V& v) {
        const long cols[] = {3, -1, 0, 3};
        return num::sum(num::square(num::take_columns(v[0], cols)));
    }, {random_tensor(Shape{2, 3, 4}, rng)});
    check("per-sample ops", [](Tape&, const V& v) {
        return num::sum(num::square(num::sum_per_sample(num::scale_per_sample(v[0], v[1]))));
    }, {random_tensor(Shape{3, 2, 2}, rng), random_tensor(Shape{3}, rng)});
    check("mse", [](Tape&, const V& v) { return num::mse(v[0], v[1]); },
          {random_tensor(s23, rng), random_tensor(s23, rng)});
}

TEST_CASE("shared subexpressions: DAG gradient equals the expanded tree") {
    Tape dag;
    Var x = dag.variable(Tensor::vector({0.3, -0.7}));
    Var s = num::tanh(x);
    dag.backward(num::sum(s * s + s));

    Tape tree;
    Var y = tree.variable(Tensor::vector({0.3, -0.7}));
    tree.backward(num::sum(num::tanh(y) * num::tanh(y) + num::tanh(y)));
    for (std::size_t k = 0; k < 2; ++k) CHECK(x.grad().data[k] == doctest::Approx(y.grad().data[k]).epsilon(1e-14));
}

TEST_CASE("parameters receive gradients through the tape") {
    num::Parameter p("w", Tensor::vector({1.0, 2.0}));
    Tape tape;
    Var w = tape.parameter(p);
    tape.backward(num::sum(num::square(w)));
    CHECK(p.grad.data[0] == doctest::Approx(2.0));
    CHECK(p.grad.data[1] == doctest::Approx(4.0));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    num::Parameter p("w", Tensor::vector({0.5, -1.0}));
    num::Adam adam;
    num::Parameter* ps[] = {&p};
    for (int i = 0; i < 10; ++i) adam.step(ps);
    CHECK(p.value.data == std::vector<double>{0.5, -1.0});
    CHECK(adam.state().step == 10);
}

TEST_CASE("adam: first step on a constant gradient moves by the learning rate") {
    num::Parameter p("w", Tensor::scalar(1.0));
    p.grad.data[0] = 3.7;
    num::Adam adam(num::AdamOptions{1e-3});
    num::Parameter* ps[] = {&p};
    adam.step(ps);
    CHECK(1.0 - p.value.item() == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam: non-finite gradient skips the step with a warning") {
    num::Parameter p("w", Tensor::scalar(1.0));
    p.grad.data[0] = std::numeric_limits<double>::infinity();
    num::Adam adam;
    num::Parameter* ps[] = {&p};
    const auto r = adam.step(ps);
    CHECK_FALSE(r.applied);
    CHECK_FALSE(r.warning.empty());
    CHECK(p.value.item() == 1.0);
    CHECK(adam.state().step == 0);
}

TEST_CASE("adam: identical runs are bitwise identical") {
    auto run = [] {
        num::Parameter p("w", Tensor::vector({0.1, 0.2, 0.3}));
        num::Adam adam(num::AdamOptions{1e-2});
        num::Parameter* ps[] = {&p};
        for (int i = 0; i < 50; ++i) {
            Tape tape;
            p.zero_grad();
            Var w = tape.parameter(p);
            tape.backward(num::sum(num::square(num::add_scalar(num::tanh(w), -0.05))));
            adam.step(ps);
        }
        return p.value.data;
    };
    CHECK(run() == run());
}

TEST_CASE("checkpoint round trip is value exact") {
    num::ParameterSet a;
    a.add("enc.w", Tensor(Shape{2, 1, 3}, {0.1, -1.0 / 3.0, 1e-300, 5e300, -0.0, 3.14159}));
    a.add("dec.b", Tensor::vector({std::nextafter(1.0, 2.0)}));
    std::stringstream ss;
    num::write_checkpoint(ss, a);

    num::ParameterSet b;
    b.add("enc.w", Tensor(Shape{2, 1, 3}));
    b.add("dec.b", Tensor(Shape{1}));
    num::read_checkpoint(ss, b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value.data == b[i].value.data);

    num::ParameterSet wrong;
    wrong.add("enc.w", Tensor(Shape{2, 3}));
    wrong.add("dec.b", Tensor(Shape{1}));
    std::stringstream again;
    num::write_checkpoint(again, a);
    CHECK_THROWS(num::read_checkpoint(again, wrong));

    std::stringstream garbage("hello 1\n");
    CHECK_THROWS(num::read_checkpoint(garbage, b));
}

}  // TEST_SUITE
