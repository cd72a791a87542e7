#include <doctest.h>

#include <random>

#include "engage/concentration.hpp"
#include "engage/errors.hpp"

using namespace engage;

TEST_CASE("default weights") {
    const auto w = EmotionWeights::defaults();
    CHECK(w.complete());
    CHECK(w.at(EmotionLabel::Neutral) == 0.9);
    CHECK(w.at(EmotionLabel::Happy) == 0.6);
    CHECK(w.at(EmotionLabel::Surprise) == 0.6);
    CHECK(w.at(EmotionLabel::Sad) == 0.3);
    CHECK(w.at(EmotionLabel::Fear) == 0.3);
    CHECK(w.at(EmotionLabel::Angry) == 0.25);
    CHECK(w.at(EmotionLabel::Disgust) == 0.2);
}

TEST_CASE("weights are validated and may be partial") {
    EmotionWeights w;
    CHECK_FALSE(w.complete());
    CHECK_THROWS_AS(w.at(EmotionLabel::Sad), UnknownEmotion);
    CHECK_THROWS_AS(w.set(EmotionLabel::Sad, 1.5), std::invalid_argument);
    w.set(EmotionLabel::Surprise, 0.5);
    CHECK(compute_ci({EmotionLabel::Surprise, 0.8}, w) == doctest::Approx(40.0));
    CHECK_THROWS_AS(compute_ci({EmotionLabel::Sad, 0.8}, w), UnknownEmotion);
}

TEST_CASE("ci examples") {
    const auto w = EmotionWeights::defaults();
    CHECK(compute_ci({EmotionLabel::Neutral, 1.0}, w) == doctest::Approx(90.0));
    CHECK(compute_ci({EmotionLabel::Happy, 0.5}, w) == doctest::Approx(30.0));
    CHECK(compute_ci({EmotionLabel::Disgust, 1.0}, w) == doctest::Approx(20.0));
    CHECK(compute_ci({EmotionLabel::Neutral, 0.0}, w) == 0.0);
}

TEST_CASE("classification ladder") {
    const AttentionResult focused{AttentionState::Focused, 100};
    const AttentionResult distracted{AttentionState::Distracted, 0};
    CHECK(classify_engagement(focused, 50.0) == EngagementCategory::VeryEngaged);
    CHECK(classify_engagement(focused, 49.999) == EngagementCategory::NominallyEngaged);
    CHECK(classify_engagement(distracted, 90.0) == EngagementCategory::NotEngaged);
    CHECK(classify_engagement(focused, 60.0, 70.0) == EngagementCategory::NominallyEngaged);
}

TEST_CASE("frame verdicts") {
    const auto w = EmotionWeights::defaults();
    const AttentionResult focused{AttentionState::Focused, 100};
    const AttentionResult distracted{AttentionState::Distracted, 0};

    const auto v = frame_verdict(focused, EmotionDistribution::one_hot(EmotionLabel::Neutral), w, 7);
    CHECK(v.frame_index == 7);
    CHECK(v.ci == doctest::Approx(90.0));
    CHECK(v.category == EngagementCategory::VeryEngaged);
    REQUIRE(v.dominant);
    CHECK(v.dominant->label == EmotionLabel::Neutral);

    const auto d = frame_verdict(distracted, EmotionDistribution::one_hot(EmotionLabel::Happy), w, 8);
    CHECK(d.ci == 0.0);
    CHECK(d.category == EngagementCategory::NotEngaged);
    CHECK_FALSE(d.dominant.has_value());

    const auto degraded = frame_verdict(focused, std::nullopt, w, 9);
    CHECK(degraded.degraded);
    CHECK(degraded.ci == 0.0);
    CHECK(degraded.category == EngagementCategory::NominallyEngaged);
}

TEST_CASE("property: ci stays within [0,100] for any valid input") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EmotionWeights w;
    for (int trial = 0; trial < 10000; ++trial) {
        for (auto label : kEmotionOrder) w.set(label, u(rng));
        const double ci = compute_ci({kEmotionOrder[trial % 7], u(rng)}, w);
        CHECK(ci >= 0.0);
        CHECK(ci <= 100.0);
    }
}
