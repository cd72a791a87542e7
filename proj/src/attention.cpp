#include "engage/attention.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "engage/errors.hpp"
#include "engage/nn/network.hpp"

namespace engage {

AttentionScore::AttentionScore(double c) : c_(c) {
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("attention score outside [0,1]");
}

AttentionResult binarize_attention(AttentionScore score, double threshold) {
    if (score.value() > threshold) return {AttentionState::Focused, 100};
    return {AttentionState::Distracted, 0};
}

const char* to_string(AttentionState state) {
    return state == AttentionState::Focused ? "Focused" : "Distracted";
}

AttentionScore classify_attention(const GrayPatch& patch, const AttentionBackend& backend) {
    if (patch.pixels.rows != patch.pixels.cols || patch.side() != AttentionBackend::kInputSide) {
        throw ShapeMismatch(AttentionBackend::kInputSide, patch.side());
    }
    return backend.score(patch);
}

StubAttentionBackend::StubAttentionBackend() : StubAttentionBackend({{"focused", 0.9}, {"distracted", 0.1}}) {}

StubAttentionBackend::StubAttentionBackend(std::map<std::string, double> table, double fallback)
    : table_(std::move(table)), fallback_(fallback) {}

AttentionScore StubAttentionBackend::score(const GrayPatch& patch) const {
    ++calls_;
    std::optional<double> found;
    for (const auto& token : tag_tokens(patch.tag)) {
        if (token.rfind("c=", 0) == 0) {
            double v = 0.0;
            const auto* first = token.data() + 2;
            const auto* last = token.data() + token.size();
            if (std::from_chars(first, last, v).ec == std::errc{}) return AttentionScore(v);
        }
        if (auto it = table_.find(token); it != table_.end() && !found) found = it->second;
    }
    return AttentionScore(found.value_or(fallback_));
}

CnnAttentionBackend::CnnAttentionBackend(const std::string& model_path) : path_(model_path) {
    auto net = std::make_unique<nn::Network>(nn::Network::load(model_path));
    if (net->input_side() != kInputSide || net->classes().size() != 2) {
        throw ModelLoadError("not a two-class 64x64 attention model: " + model_path);
    }
    const auto& classes = net->classes();
    const auto it = std::find(classes.begin(), classes.end(), "focused");
    if (it == classes.end()) throw ModelLoadError("attention model has no `focused` class: " + model_path);
    focused_index_ = static_cast<std::size_t>(it - classes.begin());
    net_ = std::move(net);
}

CnnAttentionBackend::~CnnAttentionBackend() = default;

AttentionScore CnnAttentionBackend::score(const GrayPatch& patch) const {
    nn::Tensor input({1, 1, kInputSide, kInputSide});
    const cv::Mat p = patch.pixels.isContinuous() ? patch.pixels : patch.pixels.clone();
    std::copy(p.ptr<float>(0), p.ptr<float>(0) + kInputSide * kInputSide, input.data());
    const auto probs = net_->predict_proba(input);
    return AttentionScore(std::clamp(probs[0][focused_index_], 0.0, 1.0));
}

}  // namespace engage
