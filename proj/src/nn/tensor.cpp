#include "rallypose/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rallypose/error.hpp"

namespace rallypose::nn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            s += ",";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    if (std::any_of(shape_.begin(), shape_.end(), [](std::size_t d) { return d == 0; })) {
        throw ShapeError("tensor dimensions must be positive: " + shape_string(shape_));
    }
    data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (std::any_of(shape_.begin(), shape_.end(), [](std::size_t d) { return d == 0; })) {
        throw ShapeError("tensor dimensions must be positive: " + shape_string(shape_));
    }
    if (data_.size() != shape_product(shape_)) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
    }
}

MatrixMap Tensor::rows() {
    const std::size_t cols = shape_.empty() ? 1 : shape_.back();
    return MatrixMap(data_.data(), static_cast<Eigen::Index>(data_.size() / cols), static_cast<Eigen::Index>(cols));
}

ConstMatrixMap Tensor::rows() const {
    const std::size_t cols = shape_.empty() ? 1 : shape_.back();
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(data_.size() / cols),
                          static_cast<Eigen::Index>(cols));
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void expect_shape(const Tensor& t, const std::vector<std::size_t>& expected, const char* what) {
    if (t.shape() != expected) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
    }
}

} // namespace rallypose::nn
