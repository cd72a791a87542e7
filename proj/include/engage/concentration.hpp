#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "engage/attention.hpp"
#include "engage/emotion.hpp"

namespace engage {

/// Per-emotion weight EW in [0,1] used to turn the dominant emotion probability into a concentration index.
class EmotionWeights {
public:
    /// neutral 0.9, happy 0.6, surprise 0.6, sad 0.3, fear 0.3, angry 0.25, disgust 0.2
    static EmotionWeights defaults();

    EmotionWeights() = default;

    /// Throws std::invalid_argument unless 0 <= weight <= 1.
    void set(EmotionLabel label, double weight);
    bool has(EmotionLabel label) const { return weights_[index_of(label)].has_value(); }
    /// Throws UnknownEmotion when the label has no weight.
    double at(EmotionLabel label) const;
    bool complete() const;

private:
    std::array<std::optional<double>, kEmotionCount> weights_{};
};

enum class EngagementCategory { VeryEngaged, NominallyEngaged, NotEngaged };

inline constexpr std::array<EngagementCategory, 3> kCategories = {
    EngagementCategory::VeryEngaged, EngagementCategory::NominallyEngaged, EngagementCategory::NotEngaged};

std::string_view to_string(EngagementCategory category);

inline constexpr double kDefaultEngagementThreshold = 50.0;

struct ConcentrationSample {
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
    AttentionResult attention;
    std::optional<DominantEmotion> dominant;
    double ci = 0.0;  // percent
    EngagementCategory category = EngagementCategory::NotEngaged;
    /// Focused but no emotion distribution was available (backend failure).
    bool degraded = false;
};

/// ci = dep * EW(label) * 100.
double compute_ci(const DominantEmotion& dominant, const EmotionWeights& weights);

/// Distracted -> NotEngaged; Focused with ci >= threshold -> VeryEngaged; otherwise NominallyEngaged.
EngagementCategory classify_engagement(const AttentionResult& attention, double ci,
                                       double threshold = kDefaultEngagementThreshold);

/// Full per-frame verdict. The distribution is ignored when the student is distracted;
/// a focused frame without a distribution scores ci 0 and is flagged degraded.
ConcentrationSample frame_verdict(const AttentionResult& attention, const std::optional<EmotionDistribution>& dist,
                                  const EmotionWeights& weights, std::int64_t frame_index,
                                  double engagement_threshold = kDefaultEngagementThreshold);

}  // namespace engage
