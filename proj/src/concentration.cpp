#include "engage/concentration.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "engage/errors.hpp"

namespace engage {

EmotionWeights EmotionWeights::defaults() {
    EmotionWeights w;
    w.set(EmotionLabel::Neutral, 0.9);
    w.set(EmotionLabel::Happy, 0.6);
    w.set(EmotionLabel::Surprise, 0.6);
    w.set(EmotionLabel::Sad, 0.3);
    w.set(EmotionLabel::Fear, 0.3);
    w.set(EmotionLabel::Angry, 0.25);
    w.set(EmotionLabel::Disgust, 0.2);
    return w;
}

void EmotionWeights::set(EmotionLabel label, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0)) {
        throw std::invalid_argument("emotion weight for " + std::string(to_string(label)) + " outside [0,1]");
    }
    weights_[index_of(label)] = weight;
}

double EmotionWeights::at(EmotionLabel label) const {
    const auto& w = weights_[index_of(label)];
    if (!w) throw UnknownEmotion("no weight for emotion " + std::string(to_string(label)));
    return *w;
}

bool EmotionWeights::complete() const {
    return std::all_of(weights_.begin(), weights_.end(), [](const auto& w) { return w.has_value(); });
}

std::string_view to_string(EngagementCategory category) {
    switch (category) {
        case EngagementCategory::VeryEngaged: return "VeryEngaged";
        case EngagementCategory::NominallyEngaged: return "NominallyEngaged";
        case EngagementCategory::NotEngaged: return "NotEngaged";
    }
    return "NotEngaged";
}

double compute_ci(const DominantEmotion& dominant, const EmotionWeights& weights) {
    const double ci = dominant.dep * weights.at(dominant.label) * 100.0;
    return std::clamp(ci, 0.0, 100.0);
}

EngagementCategory classify_engagement(const AttentionResult& attention, double ci, double threshold) {
    if (!attention.focused()) return EngagementCategory::NotEngaged;
    return ci >= threshold ? EngagementCategory::VeryEngaged : EngagementCategory::NominallyEngaged;
}

ConcentrationSample frame_verdict(const AttentionResult& attention, const std::optional<EmotionDistribution>& dist,
                                  const EmotionWeights& weights, std::int64_t frame_index,
                                  double engagement_threshold) {
    ConcentrationSample s;
    s.frame_index = frame_index;
    s.attention = attention;
    if (!attention.focused()) {
        s.ci = 0.0;
        s.category = EngagementCategory::NotEngaged;
        return s;
    }
    if (!dist) {
        s.ci = 0.0;
        s.category = EngagementCategory::NominallyEngaged;
        s.degraded = true;
        return s;
    }
    s.dominant = dominant_emotion(*dist);
    s.ci = compute_ci(*s.dominant, weights);
    s.category = classify_engagement(attention, s.ci, engagement_threshold);
    return s;
}

}  // namespace engage
