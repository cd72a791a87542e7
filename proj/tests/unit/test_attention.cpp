#include <doctest.h>

#include "engage/attention.hpp"
#include "engage/errors.hpp"
#include "engage/nn/network.hpp"
#include "test_support.hpp"

using namespace engage;

namespace {

GrayPatch patch(int side, std::string tag = {}) {
    return {cv::Mat(side, side, CV_32FC1, cv::Scalar(0.5f)), std::move(tag)};
}

}  // namespace

TEST_CASE("binarization is strict at the threshold") {
    CHECK(binarize_attention(AttentionScore(0.5)).state == AttentionState::Distracted);
    CHECK(binarize_attention(AttentionScore(0.5)).percent == 0);
    CHECK(binarize_attention(AttentionScore(0.500001)).state == AttentionState::Focused);
    CHECK(binarize_attention(AttentionScore(0.9)).percent == 100);
    CHECK(binarize_attention(AttentionScore(0.0)).percent == 0);
    CHECK(binarize_attention(AttentionScore(1.0)).percent == 100);
    CHECK(binarize_attention(AttentionScore(0.7), 0.8).state == AttentionState::Distracted);
}

TEST_CASE("scores outside the unit interval are rejected") {
    CHECK_THROWS_AS(AttentionScore(-0.01), std::invalid_argument);
    CHECK_THROWS_AS(AttentionScore(1.01), std::invalid_argument);
    CHECK_THROWS_AS(AttentionScore(std::nan("")), std::invalid_argument);
}

TEST_CASE("stub backend reads its table and c= overrides") {
    StubAttentionBackend stub;
    CHECK(classify_attention(patch(64, "focused"), stub).value() == doctest::Approx(0.9));
    CHECK(classify_attention(patch(64, "distracted"), stub).value() == doctest::Approx(0.1));
    CHECK(classify_attention(patch(64, "unknown"), stub).value() == 0.0);
    CHECK(classify_attention(patch(64, "focused;c=0.42"), stub).value() == doctest::Approx(0.42));
    CHECK(stub.calls() == 4);
}

TEST_CASE("wrong patch size raises ShapeMismatch") {
    StubAttentionBackend stub;
    try {
        classify_attention(patch(48), stub);
        FAIL("expected ShapeMismatch");
    } catch (const ShapeMismatch& e) {
        CHECK(e.expected() == 64);
        CHECK(e.actual() == 48);
    }
    CHECK(stub.calls() == 0);
}

TEST_CASE("cnn backend loads a saved model and yields c in [0,1]") {
    testsupport::TempDir dir("att");
    auto net = nn::build_attention_cnn();
    net.initialize(3);
    net.save(dir.file("att.engm"));
    const CnnAttentionBackend cnn(dir.file("att.engm"));
    cv::Mat pixels(64, 64, CV_32FC1);
    cv::randu(pixels, 0.0f, 1.0f);
    const double c = classify_attention({pixels, {}}, cnn).value();
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);

    auto emo = nn::build_mini_xception({"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"});
    emo.initialize(1);
    emo.save(dir.file("emo.engm"));
    CHECK_THROWS_AS(CnnAttentionBackend(dir.file("emo.engm")), ModelLoadError);
    CHECK_THROWS_AS(CnnAttentionBackend(dir.file("missing.engm")), ModelLoadError);
}
