#include "engage/nn/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "engage/errors.hpp"

namespace engage::nn {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'G', 'M', 'O', 'D', 'L', '1'};

static_assert(std::endian::native == std::endian::little, "model files are little-endian float32");

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

LayerPtr conv(int in, int out, int k, int stride, Padding pad, bool bias) {
    return std::make_unique<Conv2D>(in, out, k, stride, pad, bias);
}

}  // namespace

Network::Network(std::string task, int input_side, std::vector<std::string> classes, Sequential body)
    : task_(std::move(task)), input_side_(input_side), classes_(std::move(classes)), body_(std::move(body)) {
    const Shape out = body_.output_shape({1, 1, input_side_, input_side_});
    if (out.per_sample() != classes_.size()) {
        throw std::invalid_argument("network emits " + out.str() + " for " + std::to_string(classes_.size()) + " classes");
    }
}

void Network::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    body_.initialize(rng);
}

Tensor Network::logits(const Tensor& batch) const {
    const Shape s = batch.shape();
    if (s.c != 1 || s.h != input_side_ || s.w != input_side_) {
        throw std::invalid_argument("network input must be [n,1," + std::to_string(input_side_) + "," +
                                    std::to_string(input_side_) + "], got " + s.str());
    }
    return body_.infer(batch);
}

std::vector<double> softmax(const float* logits, int count) {
    std::vector<double> p(count);
    double mx = logits[0];
    for (int i = 1; i < count; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    double sum = 0.0;
    for (int i = 0; i < count; ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::vector<std::vector<double>> Network::predict_proba(const Tensor& batch) const {
    const Tensor z = logits(batch);
    const int k = static_cast<int>(classes_.size());
    std::vector<std::vector<double>> out;
    out.reserve(z.shape().n);
    for (int n = 0; n < z.shape().n; ++n) out.push_back(softmax(z.sample(n), k));
    return out;
}

std::size_t Network::parameter_count() {
    std::size_t total = 0;
    for (const Param* p : body_.params()) total += p->value.size();
    return total;
}

void Network::save(const std::string& path) {
    nlohmann::json header;
    header["format"] = "engage-model";
    header["version"] = 1;
    header["task"] = task_;
    header["input_side"] = input_side_;
    header["classes"] = classes_;
    header["architecture"] = body_.config();
    header["metadata"] = metadata_;
    std::vector<std::size_t> sizes;
    for (const Param* p : body_.params()) sizes.push_back(p->value.size());
    for (const auto* b : body_.buffers()) sizes.push_back(b->size());
    header["tensor_sizes"] = sizes;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path);
    const std::string text = header.dump();
    out.write(kMagic, sizeof kMagic);
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Param* p : body_.params()) {
        out.write(reinterpret_cast<const char*>(p->value.data()), static_cast<std::streamsize>(p->value.size() * 4));
    }
    for (const auto* b : body_.buffers()) {
        out.write(reinterpret_cast<const char*>(b->data()), static_cast<std::streamsize>(b->size() * 4));
    }
    if (!out) throw IoError("failed writing model file: " + path);
}

Network Network::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelLoadError("cannot open model file: " + path);
    char magic[sizeof kMagic] = {};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ModelLoadError("not a model file: " + path);
    const std::uint64_t len = read_u64(in);
    if (!in || len > (64u << 20)) throw ModelLoadError("corrupt model header: " + path);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw ModelLoadError("truncated model header: " + path);

    try {
        const auto header = nlohmann::json::parse(text);
        auto layer = layer_from_config(header.at("architecture"));
        auto* seq = dynamic_cast<Sequential*>(layer.get());
        if (!seq) throw ModelLoadError("model architecture root must be sequential");
        Network net(header.at("task").get<std::string>(), header.at("input_side").get<int>(),
                    header.at("classes").get<std::vector<std::string>>(), std::move(*seq));
        net.metadata_ = header.value("metadata", nlohmann::json::object());

        const auto sizes = header.at("tensor_sizes").get<std::vector<std::size_t>>();
        std::vector<std::vector<float>*> targets;
        for (Param* p : net.body_.params()) targets.push_back(&p->value);
        for (auto* b : net.body_.buffers()) targets.push_back(b);
        if (sizes.size() != targets.size()) throw ModelLoadError("tensor count mismatch in " + path);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (sizes[i] != targets[i]->size()) throw ModelLoadError("tensor size mismatch in " + path);
            in.read(reinterpret_cast<char*>(targets[i]->data()), static_cast<std::streamsize>(sizes[i] * 4));
            if (!in) throw ModelLoadError("truncated weights in " + path);
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ModelLoadError("bad model header in " + path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ModelLoadError("bad model architecture in " + path + ": " + e.what());
    }
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor& grad) {
    const int batch = logits.shape().n;
    const int k = static_cast<int>(logits.shape().per_sample());
    grad = Tensor(logits.shape());
    double loss = 0.0;
    for (int n = 0; n < batch; ++n) {
        const auto p = softmax(logits.sample(n), k);
        loss -= std::log(std::max(p[labels[n]], 1e-12));
        float* g = grad.sample(n);
        for (int j = 0; j < k; ++j) g[j] = static_cast<float>((p[j] - (j == labels[n] ? 1.0 : 0.0)) / batch);
    }
    return loss / batch;
}

Adam::Adam(std::vector<Param*> params, Options options) : params_(std::move(params)), options_(options) {
    for (const Param* p : params_) {
        m_.emplace_back(p->value.size(), 0.0f);
        v_.emplace_back(p->value.size(), 0.0f);
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

void Adam::step() {
    ++step_count_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double lr_t = options_.learning_rate * std::sqrt(1.0 - std::pow(b2, step_count_)) /
                        (1.0 - std::pow(b1, step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& w = params_[i]->value;
        const auto& g = params_[i]->grad;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = static_cast<float>(b1 * m[j] + (1.0 - b1) * g[j]);
            v[j] = static_cast<float>(b2 * v[j] + (1.0 - b2) * g[j] * g[j]);
            w[j] -= static_cast<float>(lr_t * m[j] / (std::sqrt(static_cast<double>(v[j])) + options_.epsilon));
        }
    }
}

Network build_attention_cnn(int conv1_filters, int conv2_filters) {
    Sequential body;
    body.add(conv(1, conv1_filters, 3, 1, Padding::Valid, true));
    body.add(std::make_unique<ReLU>());
    body.add(std::make_unique<MaxPool2D>(2, 2, Padding::Valid));
    body.add(conv(conv1_filters, conv2_filters, 3, 1, Padding::Valid, true));
    body.add(std::make_unique<ReLU>());
    body.add(std::make_unique<MaxPool2D>(2, 2, Padding::Valid));
    body.add(std::make_unique<Flatten>());
    const Shape flat = body.output_shape({1, 1, 64, 64});
    body.add(std::make_unique<Dense>(static_cast<int>(flat.per_sample()), 2));
    return Network("attention", 64, {"distracted", "focused"}, std::move(body));
}

Network build_mini_xception(const std::vector<std::string>& classes) {
    Sequential body;
    body.add(conv(1, 8, 3, 1, Padding::Valid, false));
    body.add(std::make_unique<BatchNorm>(8));
    body.add(std::make_unique<ReLU>());
    body.add(conv(8, 8, 3, 1, Padding::Valid, false));
    body.add(std::make_unique<BatchNorm>(8));
    body.add(std::make_unique<ReLU>());

    int channels = 8;
    for (int filters : {16, 32, 64, 128}) {
        Sequential shortcut;
        shortcut.add(conv(channels, filters, 1, 2, Padding::Same, false));
        shortcut.add(std::make_unique<BatchNorm>(filters));

        // separable conv = depthwise 3x3 followed by pointwise 1x1
        Sequential main;
        main.add(std::make_unique<DepthwiseConv2D>(channels, 3, 1, Padding::Same));
        main.add(conv(channels, filters, 1, 1, Padding::Same, false));
        main.add(std::make_unique<BatchNorm>(filters));
        main.add(std::make_unique<ReLU>());
        main.add(std::make_unique<DepthwiseConv2D>(filters, 3, 1, Padding::Same));
        main.add(conv(filters, filters, 1, 1, Padding::Same, false));
        main.add(std::make_unique<BatchNorm>(filters));
        main.add(std::make_unique<MaxPool2D>(3, 2, Padding::Same));

        body.add(std::make_unique<Residual>(std::move(main), std::move(shortcut)));
        channels = filters;
    }
    body.add(conv(channels, static_cast<int>(classes.size()), 3, 1, Padding::Same, true));
    body.add(std::make_unique<GlobalAvgPool>());
    return Network("emotion", 48, classes, std::move(body));
}

}  // namespace engage::nn
