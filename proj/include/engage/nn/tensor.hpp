#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace engage::nn {

struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
    std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
    friend bool operator==(const Shape&, const Shape&) = default;
    std::string str() const;
};

/// Dense NCHW float tensor.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f) : shape_(shape), data_(shape.size(), fill) {}
    Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size()) throw std::invalid_argument("tensor data does not match shape " + shape_.str());
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float* sample(int i) { return data_.data() + static_cast<std::size_t>(i) * shape_.per_sample(); }
    const float* sample(int i) const { return data_.data() + static_cast<std::size_t>(i) * shape_.per_sample(); }

    float& at(int n, int c, int y, int x) {
        return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }
    float at(int n, int c, int y, int x) const {
        return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }

    /// Same data, different shape of equal size.
    Tensor reshaped(Shape shape) const& { return Tensor(shape, data_); }
    Tensor reshaped(Shape shape) && { return Tensor(shape, std::move(data_)); }

private:
    Shape shape_;
    std::vector<float> data_;
};

/// Trainable parameter with its gradient accumulator.
struct Param {
    std::string name;
    std::vector<float> value;
    std::vector<float> grad;

    explicit Param(std::string n = {}, std::size_t size = 0) : name(std::move(n)), value(size, 0.0f), grad(size, 0.0f) {}
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

}  // namespace engage::nn
