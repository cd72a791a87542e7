#include "engage/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "engage/errors.hpp"
#include "engage/nn/network.hpp"

namespace engage {

namespace {

constexpr std::array<std::string_view, kEmotionCount> kNames = {"angry", "disgust", "fear",   "happy",
                                                                 "sad",   "surprise", "neutral"};

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

std::string_view to_string(EmotionLabel label) { return kNames[index_of(label)]; }

std::optional<EmotionLabel> parse_emotion_label(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        if (lower == kNames[i]) return kEmotionOrder[i];
    }
    if (lower == "scared" || lower == "scare") return EmotionLabel::Fear;
    if (lower == "surprised") return EmotionLabel::Surprise;
    if (lower == "anger") return EmotionLabel::Angry;
    return std::nullopt;
}

bool EmotionDistribution::is_valid(const std::array<double, kEmotionCount>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= kSumTolerance;
}

EmotionDistribution::EmotionDistribution(const std::array<double, kEmotionCount>& p) : p_(p) {
    if (!is_valid(p)) throw std::invalid_argument("emotion probabilities must lie in [0,1] and sum to 1");
}

EmotionDistribution EmotionDistribution::one_hot(EmotionLabel label) {
    std::array<double, kEmotionCount> p{};
    p[index_of(label)] = 1.0;
    return EmotionDistribution(p);
}

EmotionDistribution EmotionDistribution::uniform() {
    std::array<double, kEmotionCount> p;
    p.fill(1.0 / kEmotionCount);
    return EmotionDistribution(p);
}

DominantEmotion dominant_emotion(const EmotionDistribution& dist) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kEmotionCount; ++i) {
        if (dist[i] > dist[best]) best = i;  // strict: earlier label keeps ties
    }
    return {kEmotionOrder[best], dist[best]};
}

EmotionDistribution predict_emotion_distribution(const GrayPatch& patch, const EmotionBackend& backend) {
    if (patch.pixels.rows != patch.pixels.cols || patch.side() != EmotionBackend::kInputSide) {
        throw ShapeMismatch(EmotionBackend::kInputSide, patch.side());
    }
    return backend.predict(patch);
}

EmotionDistribution StubEmotionBackend::predict(const GrayPatch& patch) const {
    ++calls_;
    for (const auto& token : tag_tokens(patch.tag)) {
        if (token.rfind("p=", 0) == 0) {
            std::array<double, kEmotionCount> p{};
            std::string_view rest = std::string_view(token).substr(2);
            std::size_t i = 0;
            while (i < kEmotionCount) {
                const auto comma = rest.find(',');
                const auto v = parse_double(rest.substr(0, comma));
                if (!v) break;
                p[i++] = *v;
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            if (i == kEmotionCount && EmotionDistribution::is_valid(p)) return EmotionDistribution(p);
            continue;
        }
        const auto colon = token.find(':');
        if (colon == std::string::npos) continue;
        const auto label = parse_emotion_label(std::string_view(token).substr(0, colon));
        const auto prob = parse_double(std::string_view(token).substr(colon + 1));
        if (!label || !prob || *prob < 0.0 || *prob > 1.0) continue;
        std::array<double, kEmotionCount> p;
        p.fill((1.0 - *prob) / static_cast<double>(kEmotionCount - 1));
        p[index_of(*label)] = *prob;
        return EmotionDistribution(p);
    }
    return EmotionDistribution::uniform();
}

CnnEmotionBackend::CnnEmotionBackend(const std::string& model_path) : path_(model_path) {
    auto net = std::make_unique<nn::Network>(nn::Network::load(model_path));
    if (net->input_side() != kInputSide || net->classes().size() != kEmotionCount) {
        throw ModelLoadError("not a 7-class 48x48 emotion model: " + model_path);
    }
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        if (parse_emotion_label(net->classes()[i]) != kEmotionOrder[i]) {
            throw ModelLoadError("emotion model classes are not in canonical order: " + model_path);
        }
    }
    net_ = std::move(net);
}

CnnEmotionBackend::~CnnEmotionBackend() = default;

EmotionDistribution CnnEmotionBackend::predict(const GrayPatch& patch) const {
    nn::Tensor input({1, 1, kInputSide, kInputSide});
    const cv::Mat p = patch.pixels.isContinuous() ? patch.pixels : patch.pixels.clone();
    std::copy(p.ptr<float>(0), p.ptr<float>(0) + kInputSide * kInputSide, input.data());
    const auto probs = net_->predict_proba(input)[0];
    std::array<double, kEmotionCount> out{};
    std::copy(probs.begin(), probs.end(), out.begin());
    // softmax in double already sums to 1 well inside the tolerance; renormalize against drift
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v = std::clamp(v / sum, 0.0, 1.0);
    return EmotionDistribution(out);
}

}  // namespace engage
