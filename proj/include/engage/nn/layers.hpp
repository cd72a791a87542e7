#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/nn/tensor.hpp"

namespace engage::nn {

enum class Padding { Valid, Same };

/// Output extent and leading pad for one spatial axis.
struct AxisGeometry {
    int out = 0;
    int pad_before = 0;
};

AxisGeometry axis_geometry(int in, int kernel, int stride, Padding padding);

/// A differentiable layer. `forward` caches what `backward` needs; `infer` is
/// the cache-free inference path and is safe to call concurrently.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string type() const = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor infer(const Tensor& x) const = 0;
    /// Consumes dL/dy and returns dL/dx, accumulating parameter gradients.
    virtual Tensor backward(const Tensor& dy) = 0;

    virtual std::vector<Param*> params() { return {}; }
    /// Non-trainable state that still has to be serialized (batch-norm running statistics).
    virtual std::vector<std::vector<float>*> buffers() { return {}; }
    virtual void initialize(std::mt19937_64&) {}
    virtual nlohmann::json config() const = 0;
};

using LayerPtr = std::unique_ptr<Layer>;

class Conv2D final : public Layer {
public:
    Conv2D(int in_channels, int filters, int kernel, int stride, Padding padding, bool bias);

    std::string type() const override { return "conv2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override;
    void initialize(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int in_, filters_, kernel_, stride_;
    Padding padding_;
    bool has_bias_;
    Param weight_;  // filters x (in * k * k)
    Param bias_;
    Tensor input_;
};

/// 3x3-style depthwise convolution with a channel multiplier of one.
class DepthwiseConv2D final : public Layer {
public:
    DepthwiseConv2D(int channels, int kernel, int stride, Padding padding);

    std::string type() const override { return "depthwise_conv2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override { return {&weight_}; }
    void initialize(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int channels_, kernel_, stride_;
    Padding padding_;
    Param weight_;  // channels x k x k
    Tensor input_;
};

class BatchNorm final : public Layer {
public:
    explicit BatchNorm(int channels, float momentum = 0.9f, float epsilon = 1e-3f);

    std::string type() const override { return "batch_norm"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::vector<float>*> buffers() override { return {&running_mean_, &running_var_}; }
    void initialize(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int channels_;
    float momentum_, epsilon_;
    Param gamma_, beta_;
    std::vector<float> running_mean_, running_var_;
    // training cache
    Tensor normalized_;
    std::vector<float> inv_std_;
    bool cached_training_ = false;
};

class ReLU final : public Layer {
public:
    std::string type() const override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    nlohmann::json config() const override { return {{"type", type()}}; }

private:
    Tensor output_;
};

class MaxPool2D final : public Layer {
public:
    MaxPool2D(int kernel, int stride, Padding padding);

    std::string type() const override { return "max_pool2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    nlohmann::json config() const override;

private:
    Tensor pool(const Tensor& x, std::vector<std::size_t>* argmax) const;

    int kernel_, stride_;
    Padding padding_;
    Shape in_shape_;
    std::vector<std::size_t> argmax_;
};

class GlobalAvgPool final : public Layer {
public:
    std::string type() const override { return "global_avg_pool"; }
    Shape output_shape(const Shape& in) const override { return {in.n, in.c, 1, 1}; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    nlohmann::json config() const override { return {{"type", type()}}; }

private:
    Shape in_shape_;
};

class Flatten final : public Layer {
public:
    std::string type() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override { return {in.n, in.c * in.h * in.w, 1, 1}; }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    nlohmann::json config() const override { return {{"type", type()}}; }

private:
    Shape in_shape_;
};

class Dense final : public Layer {
public:
    Dense(int in_features, int out_features);

    std::string type() const override { return "dense"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override { return {&weight_, &bias_}; }
    void initialize(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int in_, out_;
    Param weight_;  // out x in
    Param bias_;
    Tensor input_;
};

class Sequential final : public Layer {
public:
    Sequential() = default;
    explicit Sequential(std::vector<LayerPtr> layers) : layers_(std::move(layers)) {}

    Sequential& add(LayerPtr layer) {
        layers_.push_back(std::move(layer));
        return *this;
    }

    std::string type() const override { return "sequential"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override;
    std::vector<std::vector<float>*> buffers() override;
    void initialize(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

    std::size_t size() const { return layers_.size(); }

private:
    std::vector<LayerPtr> layers_;
};

/// y = main(x) + shortcut(x); both branches must produce the same shape.
class Residual final : public Layer {
public:
    Residual(Sequential main, Sequential shortcut) : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

    std::string type() const override { return "residual"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, bool training) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Param*> params() override;
    std::vector<std::vector<float>*> buffers() override;
    void initialize(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    Sequential main_, shortcut_;
};

/// Rebuilds a layer (recursively) from `Layer::config()` output. Weights are left uninitialized.
LayerPtr layer_from_config(const nlohmann::json& cfg);

}  // namespace engage::nn
