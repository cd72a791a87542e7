#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/nn/layers.hpp"
#include "engage/nn/tensor.hpp"

namespace engage::nn {

/// A classifier: a layer stack that maps 1 x side x side inputs to class logits,
/// plus the metadata needed to use it (input side, class names).
class Network {
public:
    Network(std::string task, int input_side, std::vector<std::string> classes, Sequential body);

    const std::string& task() const { return task_; }
    int input_side() const { return input_side_; }
    const std::vector<std::string>& classes() const { return classes_; }
    nlohmann::json& metadata() { return metadata_; }
    const nlohmann::json& metadata() const { return metadata_; }

    void initialize(std::uint64_t seed);

    /// Logits for a batch; cache-free, safe for concurrent callers.
    Tensor logits(const Tensor& batch) const;
    /// Row-wise softmax probabilities.
    std::vector<std::vector<double>> predict_proba(const Tensor& batch) const;

    Tensor forward(const Tensor& batch, bool training) { return body_.forward(batch, training); }
    void backward(const Tensor& dlogits) { body_.backward(dlogits); }
    std::vector<Param*> params() { return body_.params(); }
    std::size_t parameter_count();

    void save(const std::string& path);
    static Network load(const std::string& path);

private:
    std::string task_;
    int input_side_;
    std::vector<std::string> classes_;
    Sequential body_;
    nlohmann::json metadata_ = nlohmann::json::object();
};

/// Mean softmax cross-entropy; writes dL/dlogits into `grad`.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor& grad);

std::vector<double> softmax(const float* logits, int count);

class Adam {
public:
    struct Options {
        double learning_rate = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-7;
    };

    Adam(std::vector<Param*> params, Options options);

    void zero_grad();
    void step();

private:
    std::vector<Param*> params_;
    Options options_;
    std::vector<std::vector<float>> m_, v_;
    long step_count_ = 0;
};

/// 64x64x1 two-class eye-state network: [conv3x3(32)+relu, maxpool2] [conv3x3(64)+relu, maxpool2] dense(2).
Network build_attention_cnn(int conv1_filters = 32, int conv2_filters = 64);

/// 48x48x1 mini-Xception: two plain conv stems, four residual separable-conv
/// modules (16/32/64/128 filters), a class-count conv and global average pooling.
Network build_mini_xception(const std::vector<std::string>& classes);

}  // namespace engage::nn
