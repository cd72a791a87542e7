#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>

#include "engage/face_eyes.hpp"

namespace engage {

namespace nn {
class Network;
}

/// Classifier confidence that the student is facing the screen, in [0,1].
class AttentionScore {
public:
    explicit AttentionScore(double c);
    double value() const { return c_; }

private:
    double c_;
};

enum class AttentionState { Focused, Distracted };

struct AttentionResult {
    AttentionState state = AttentionState::Distracted;
    int percent = 0;  // 100 when focused, 0 otherwise

    bool focused() const { return state == AttentionState::Focused; }
};

inline constexpr double kDefaultAttentionThreshold = 0.5;

/// Strict threshold: c > threshold is Focused (100), everything else Distracted (0).
AttentionResult binarize_attention(AttentionScore score, double threshold = kDefaultAttentionThreshold);

const char* to_string(AttentionState state);

class AttentionBackend {
public:
    static constexpr int kInputSide = 64;

    virtual ~AttentionBackend() = default;
    virtual AttentionScore score(const GrayPatch& patch) const = 0;
    virtual std::string id() const = 0;
};

/// Checks the patch side before delegating to the backend.
AttentionScore classify_attention(const GrayPatch& patch, const AttentionBackend& backend);

/// Test backend with an embedded label table keyed on patch-tag tokens
/// (`focused` -> 0.9, `distracted` -> 0.1 by default). A `c=<value>` token
/// overrides the table. Unknown tags score `fallback`.
class StubAttentionBackend final : public AttentionBackend {
public:
    StubAttentionBackend();
    explicit StubAttentionBackend(std::map<std::string, double> table, double fallback = 0.0);

    AttentionScore score(const GrayPatch& patch) const override;
    std::string id() const override { return "stub"; }

    std::size_t calls() const { return calls_.load(); }

private:
    std::map<std::string, double> table_;
    double fallback_;
    mutable std::atomic<std::size_t> calls_{0};
};

/// Two-class eye-state CNN loaded from a serialized model file; c = P(focused).
class CnnAttentionBackend final : public AttentionBackend {
public:
    explicit CnnAttentionBackend(const std::string& model_path);
    ~CnnAttentionBackend() override;

    AttentionScore score(const GrayPatch& patch) const override;
    std::string id() const override { return "cnn:" + path_; }

private:
    std::string path_;
    std::unique_ptr<const nn::Network> net_;
    std::size_t focused_index_ = 1;
};

}  // namespace engage
