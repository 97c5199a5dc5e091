#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "factorcast/numerics/tape.hpp"

namespace factorcast::num {

struct AdamOptions {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for one parameter set, aligned by position.
struct OptimizerState {
    AdamOptions options;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::int64_t step = 0;
};

struct StepResult {
    bool applied = true;
    std::string warning;
};

/// Bias-corrected adaptive-moment update. If any gradient entry is non-finite the
/// whole step is skipped and the state is left untouched.
class Adam {
public:
    explicit Adam(AdamOptions options = {}) { state_.options = options; }

    StepResult step(std::span<Parameter*> params);

    [[nodiscard]] const OptimizerState& state() const noexcept { return state_; }
    void set_learning_rate(double lr) noexcept { state_.options.learning_rate = lr; }

private:
    OptimizerState state_;
};

}  // namespace factorcast::num
