#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace factorcast::num {

/// Raised when operand shapes do not satisfy a primitive's shape rule.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a value would become NaN or infinite.
class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Dimensions of a dense array of rank 0 to 3.
class Shape {
public:
    static constexpr std::size_t kMaxRank = 3;

    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);

    [[nodiscard]] std::size_t rank() const noexcept { return rank_; }
    [[nodiscard]] std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
    [[nodiscard]] std::size_t numel() const noexcept;
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape& a, const Shape& b) noexcept {
        return a.rank_ == b.rank_ && a.dims_ == b.dims_;
    }

private:
    std::array<std::size_t, kMaxRank> dims_{};
    std::size_t rank_ = 0;
};

/// Row-major dense array of doubles.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.numel(), fill) {}
    Tensor(Shape s, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
    [[nodiscard]] double item() const;

    double& at(std::size_t i) { return data[i]; }
    [[nodiscard]] double at(std::size_t i) const { return data[i]; }
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    [[nodiscard]] double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    [[nodiscard]] bool all_finite() const noexcept;
};

}  // namespace factorcast::num
