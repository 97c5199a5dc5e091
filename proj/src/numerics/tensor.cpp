#include "factorcast/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace factorcast::num {

Shape::Shape(std::initializer_list<std::size_t> dims) {
    if (dims.size() > kMaxRank) {
        throw ShapeError("rank " + std::to_string(dims.size()) + " exceeds maximum of 3");
    }
    std::copy(dims.begin(), dims.end(), dims_.begin());
    rank_ = dims.size();
}

std::size_t Shape::numel() const noexcept {
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
    return n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < rank_; ++i) {
        if (i) os << ',';
        os << dims_[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(s), data(std::move(values)) {
    if (data.size() != shape.numel()) {
        throw ShapeError("tensor of shape " + shape.str() + " needs " +
                         std::to_string(shape.numel()) + " values, got " +
                         std::to_string(data.size()));
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
}

double Tensor::item() const {
    if (data.size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape.str());
    }
    return data[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace factorcast::num
