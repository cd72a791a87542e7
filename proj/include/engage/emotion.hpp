#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "engage/face_eyes.hpp"

namespace engage {

namespace nn {
class Network;
}

/// Canonical classifier order. Every 7-vector in the project is indexed by it.
enum class EmotionLabel : int { Angry = 0, Disgust, Fear, Happy, Sad, Surprise, Neutral };

inline constexpr std::size_t kEmotionCount = 7;

inline constexpr std::array<EmotionLabel, kEmotionCount> kEmotionOrder = {
    EmotionLabel::Angry, EmotionLabel::Disgust, EmotionLabel::Fear,   EmotionLabel::Happy,
    EmotionLabel::Sad,   EmotionLabel::Surprise, EmotionLabel::Neutral};

std::string_view to_string(EmotionLabel label);

/// Accepts the classifier names plus the weight-table aliases
/// ("scared"/"scare" for fear, "surprised" for surprise, "anger" for angry).
std::optional<EmotionLabel> parse_emotion_label(std::string_view name);

inline std::size_t index_of(EmotionLabel label) { return static_cast<std::size_t>(label); }

class EmotionDistribution {
public:
    static constexpr double kSumTolerance = 1e-6;

    /// Throws std::invalid_argument unless every entry is in [0,1] and the sum is 1 within 1e-6.
    explicit EmotionDistribution(const std::array<double, kEmotionCount>& p);

    static EmotionDistribution one_hot(EmotionLabel label);
    static EmotionDistribution uniform();
    /// Validation without throwing; used by parsers that report their own errors.
    static bool is_valid(const std::array<double, kEmotionCount>& p);

    double operator[](EmotionLabel label) const { return p_[index_of(label)]; }
    double operator[](std::size_t i) const { return p_[i]; }
    const std::array<double, kEmotionCount>& probabilities() const { return p_; }

private:
    std::array<double, kEmotionCount> p_;
};

struct DominantEmotion {
    EmotionLabel label;
    double dep;
};

/// Argmax with ties going to the label that comes first in canonical order.
DominantEmotion dominant_emotion(const EmotionDistribution& dist);

class EmotionBackend {
public:
    static constexpr int kInputSide = 48;

    virtual ~EmotionBackend() = default;
    virtual EmotionDistribution predict(const GrayPatch& patch) const = 0;
    virtual std::string id() const = 0;
};

/// Checks the patch side before delegating to the backend.
EmotionDistribution predict_emotion_distribution(const GrayPatch& patch, const EmotionBackend& backend);

/// Test backend driven by the patch tag. A token `<label>:<p>` puts p on that
/// label and spreads 1-p uniformly over the other six; `p=a,b,c,d,e,f,g` gives
/// the full vector. Untagged patches fall back to a uniform distribution.
class StubEmotionBackend final : public EmotionBackend {
public:
    EmotionDistribution predict(const GrayPatch& patch) const override;
    std::string id() const override { return "stub"; }

    std::size_t calls() const { return calls_.load(); }
    void reset_calls() { calls_.store(0); }

private:
    mutable std::atomic<std::size_t> calls_{0};
};

/// Mini-Xception classifier loaded from a serialized model file.
class CnnEmotionBackend final : public EmotionBackend {
public:
    explicit CnnEmotionBackend(const std::string& model_path);
    ~CnnEmotionBackend() override;

    EmotionDistribution predict(const GrayPatch& patch) const override;
    std::string id() const override { return "cnn:" + path_; }

private:
    std::string path_;
    std::unique_ptr<const nn::Network> net_;
};

}  // namespace engage
