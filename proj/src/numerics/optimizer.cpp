#include "factorcast/numerics/optimizer.hpp"

#include <cmath>

namespace factorcast::num {

StepResult Adam::step(std::span<Parameter*> params) {
    for (Parameter* p : params) {
        if (p->grad.size() != p->value.size()) {
            throw ShapeError("gradient of '" + p->name + "' has shape " + p->grad.shape.str() +
                             ", parameter has " + p->value.shape.str());
        }
        if (!p->grad.all_finite()) {
            return {false, "non-finite gradient in '" + p->name + "'; step skipped"};
        }
    }
    if (state_.first_moment.empty()) {
        for (Parameter* p : params) {
            state_.first_moment.emplace_back(p->value.shape);
            state_.second_moment.emplace_back(p->value.shape);
        }
    } else if (state_.first_moment.size() != params.size()) {
        throw std::invalid_argument("optimizer bound to a different parameter set");
    }

    ++state_.step;
    const auto& o = state_.options;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state_.step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state_.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& v = params[i]->value.data;
        const auto& g = params[i]->grad.data;
        auto& m = state_.first_moment[i].data;
        auto& s = state_.second_moment[i].data;
        for (std::size_t k = 0; k < v.size(); ++k) {
            m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
            s[k] = o.beta2 * s[k] + (1.0 - o.beta2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double shat = s[k] / c2;
            v[k] -= o.learning_rate * mhat / (std::sqrt(shat) + o.epsilon);
        }
    }
    return {};
}

}  // namespace factorcast::num
