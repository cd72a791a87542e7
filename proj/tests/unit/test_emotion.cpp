#include <doctest.h>

#include <numeric>

#include "engage/emotion.hpp"
#include "engage/errors.hpp"
#include "engage/nn/network.hpp"
#include "test_support.hpp"

using namespace engage;

namespace {

GrayPatch patch(int side, std::string tag = {}) {
    return {cv::Mat(side, side, CV_32FC1, cv::Scalar(0.5f)), std::move(tag)};
}

}  // namespace

TEST_CASE("canonical order and names") {
    const char* names[] = {"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"};
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        CHECK(to_string(kEmotionOrder[i]) == names[i]);
        CHECK(index_of(kEmotionOrder[i]) == i);
        CHECK(parse_emotion_label(names[i]) == kEmotionOrder[i]);
    }
}

TEST_CASE("weight-table aliases map onto classifier labels") {
    CHECK(parse_emotion_label("Scared") == EmotionLabel::Fear);
    CHECK(parse_emotion_label("surprised") == EmotionLabel::Surprise);
    CHECK(parse_emotion_label("anger") == EmotionLabel::Angry);
    CHECK(parse_emotion_label("NEUTRAL") == EmotionLabel::Neutral);
    CHECK_FALSE(parse_emotion_label("bored").has_value());
}

TEST_CASE("distributions must be valid") {
    CHECK_NOTHROW(EmotionDistribution::uniform());
    CHECK_THROWS_AS(EmotionDistribution({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.3}), std::invalid_argument);
    CHECK_THROWS_AS(EmotionDistribution({-0.1, 0.2, 0.2, 0.2, 0.2, 0.1, 0.2}), std::invalid_argument);
    CHECK(EmotionDistribution::is_valid({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.4}));
    CHECK_FALSE(EmotionDistribution::is_valid({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.3}));
}

TEST_CASE("dominant emotion with canonical tie-break") {
    const auto one = dominant_emotion(EmotionDistribution::one_hot(EmotionLabel::Happy));
    CHECK(one.label == EmotionLabel::Happy);
    CHECK(one.dep == 1.0);
    const auto tie = dominant_emotion(EmotionDistribution({0, 0, 0.4, 0, 0.4, 0, 0.2}));
    CHECK(tie.label == EmotionLabel::Fear);
    CHECK(tie.dep == doctest::Approx(0.4));
    const auto uni = dominant_emotion(EmotionDistribution::uniform());
    CHECK(uni.label == EmotionLabel::Angry);
}

TEST_CASE("stub emotion backend") {
    StubEmotionBackend stub;
    const auto d = predict_emotion_distribution(patch(48, "focused;neutral:0.88"), stub);
    CHECK(d[EmotionLabel::Neutral] == doctest::Approx(0.88));
    CHECK(d[EmotionLabel::Happy] == doctest::Approx(0.02));
    const auto full = predict_emotion_distribution(patch(48, "p=0.1,0,0,0.6,0,0,0.3"), stub);
    CHECK(full[EmotionLabel::Happy] == doctest::Approx(0.6));
    const auto untagged = predict_emotion_distribution(patch(48), stub);
    CHECK(untagged[EmotionLabel::Sad] == doctest::Approx(1.0 / 7.0));
    CHECK(stub.calls() == 3);
    stub.reset_calls();
    CHECK(stub.calls() == 0);
}

TEST_CASE("emotion patches must be 48x48") {
    StubEmotionBackend stub;
    CHECK_THROWS_AS(predict_emotion_distribution(patch(64), stub), ShapeMismatch);
    CHECK(stub.calls() == 0);
}

TEST_CASE("cnn emotion backend returns a valid distribution") {
    testsupport::TempDir dir("emo");
    auto net = nn::build_mini_xception({"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"});
    net.initialize(2);
    net.save(dir.file("emo.engm"));
    const CnnEmotionBackend cnn(dir.file("emo.engm"));
    cv::Mat pixels(48, 48, CV_32FC1);
    cv::randu(pixels, 0.0f, 1.0f);
    const auto d = predict_emotion_distribution({pixels, {}}, cnn);
    const auto& p = d.probabilities();
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));

    auto shuffled = nn::build_mini_xception({"neutral", "disgust", "fear", "happy", "sad", "surprise", "angry"});
    shuffled.initialize(2);
    shuffled.save(dir.file("bad.engm"));
    CHECK_THROWS_AS(CnnEmotionBackend(dir.file("bad.engm")), ModelLoadError);
}
