#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <opencv2/videoio.hpp>

#include "engage/errors.hpp"
#include "engage/pipeline.hpp"
#include "test_support.hpp"

using namespace engage;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Backends stub_backends() {
    Backends b;
    b.face = std::make_unique<StubFaceDetector>();
    b.eyes = std::make_unique<StubEyeDetector>();
    b.attention = std::make_unique<StubAttentionBackend>();
    b.emotion = std::make_unique<StubEmotionBackend>();
    return b;
}

const StubEmotionBackend& emotion_stub(const Backends& b) { return dynamic_cast<const StubEmotionBackend&>(*b.emotion); }

Frame tagged_frame(std::int64_t index, std::string tag) {
    return {index, index * 40, cv::Mat(120, 120, CV_8UC3, cv::Scalar(90, 100, 110)), std::move(tag)};
}

std::vector<FrameEvent> random_events(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FrameEvent> out;
    std::int64_t frame = 0;
    for (std::size_t i = 0; i < n; ++i) {
        FrameEvent e;
        frame += 1 + static_cast<std::int64_t>(u(rng) * 3);
        e.frame_index = frame;
        e.timestamp_ms = frame * 33;
        e.c = u(rng);
        double sum = 0.0;
        for (auto& p : e.p) sum += (p = u(rng));
        for (auto& p : e.p) p /= sum;
        if (!EmotionDistribution::is_valid(e.p)) e.p = EmotionDistribution::uniform().probabilities();
        out.push_back(e);
    }
    return out;
}

class ThrowingAttention final : public AttentionBackend {
public:
    AttentionScore score(const GrayPatch&) const override { throw std::runtime_error("backend down"); }
    std::string id() const override { return "throwing"; }
};

class ThrowingEmotion final : public EmotionBackend {
public:
    EmotionDistribution predict(const GrayPatch&) const override { throw std::runtime_error("backend down"); }
    std::string id() const override { return "throwing"; }
};

nlohmann::json without_meta(nlohmann::json j) {
    j.erase("meta");
    return j;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_config(R"(# session
mode = video
input = "lecture.mp4"
face_detector = stub
attention_threshold = 0.6
engagement_threshold = 55
debounce_frames = 12
stride = 2
windows = q1:0-99, q2:100-199

[emotion_weights]
surprised = 0.5
scared = 0.35
)");
    CHECK(cfg.mode == SourceMode::Video);
    CHECK(cfg.input == "lecture.mp4");
    CHECK(cfg.attention_threshold == 0.6);
    CHECK(cfg.engagement_threshold == 55);
    CHECK(cfg.debounce_frames == 12);
    CHECK(cfg.stride == 2);
    REQUIRE(cfg.windows.size() == 2);
    CHECK(cfg.windows[1].label == "q2");
    CHECK(cfg.windows[1].start_frame == 100);
    CHECK(cfg.windows[1].end_frame == 199);
    CHECK(cfg.weights.at(EmotionLabel::Surprise) == 0.5);
    CHECK(cfg.weights.at(EmotionLabel::Fear) == 0.35);
    CHECK(cfg.weights.at(EmotionLabel::Neutral) == 0.9);

    CHECK_THROWS_AS(parse_config("colour = blue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("stride = two\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("windows = q1:9-3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[weights]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[emotion_weights]\nbored = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[emotion_weights]\nhappy = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/engage.conf"), ConfigError);
}

TEST_CASE("config validation") {
    PipelineConfig cfg;
    cfg.input = "x.csv";
    CHECK_NOTHROW(cfg.validate());
    cfg.emotion_backend = "cnn";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.emotion_model_path = "m.engm";
    CHECK_NOTHROW(cfg.validate());
    cfg.attention_threshold = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.attention_threshold = 0.5;
    cfg.engagement_threshold = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.engagement_threshold = 50;
    cfg.stride = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.stride = 1;
    cfg.mode = SourceMode::Video;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // cascade face detector without a cascade file
    cfg.input.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("event csv parsing") {
    std::istringstream header_only(std::string(kEventCsvHeader) + "\n");
    CHECK(parse_event_csv(header_only).empty());

    const auto expect_error = [](const std::string& body, std::size_t row, const std::string& reason) {
        std::istringstream in(std::string(kEventCsvHeader) + "\n" + body);
        try {
            parse_event_csv(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.row() == row);
            CHECK(e.reason() == reason);
        }
    };
    expect_error("0,0,0.9,0.1,0.1,0.1,0.1,0.1,0.1,0.3\n", 2, "distribution");
    expect_error("0,0,0.9,0,0,0,0,0,0,1\n1,0,0.9,0,0,0,0,0,0,1\n1,0,0.9,0,0,0,0,0,0,1\n", 4, "frame");
    expect_error("0,0,1.5,0,0,0,0,0,0,1\n", 2, "c");
    expect_error("0,0,0.5,0,0,0,0,0,1\n", 2, "columns");
    expect_error("0,-3,0.5,0,0,0,0,0,0,1\n", 2, "timestamp_ms");
    expect_error("x,0,0.5,0,0,0,0,0,0,1\n", 2, "frame");

    std::istringstream wrong_header("frame,c\n");
    CHECK_THROWS_AS(parse_event_csv(wrong_header), ParseError);
    CHECK_THROWS_AS(parse_event_csv(std::string("/nonexistent/events.csv")), IoError);
}

TEST_CASE("property: event csv round-trips") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto events = random_events(50 + seed * 7, seed);
        std::stringstream buf;
        write_event_csv(events, buf);
        CHECK(parse_event_csv(buf) == events);
    }
}

TEST_CASE("process_frame examples with stub backends") {
    PipelineConfig cfg;
    const auto backends = stub_backends();

    const auto noface = process_frame(tagged_frame(0, "noface;focused;neutral:1"), backends, cfg);
    CHECK(noface.sample.attention.state == AttentionState::Distracted);
    CHECK(noface.sample.ci == 0.0);
    CHECK(noface.sample.category == EngagementCategory::NotEngaged);
    CHECK_FALSE(noface.sample.degraded);

    const auto neutral = process_frame(tagged_frame(1, "focused;neutral:1"), backends, cfg);
    CHECK(neutral.sample.ci == doctest::Approx(compute_ci({EmotionLabel::Neutral, 1.0}, EmotionWeights::defaults())));
    CHECK(neutral.sample.ci == doctest::Approx(90.0));
    CHECK(neutral.sample.category == EngagementCategory::VeryEngaged);
    CHECK(neutral.sample.timestamp_ms == 40);

    const std::size_t calls_before = emotion_stub(backends).calls();
    const auto distracted = process_frame(tagged_frame(2, "distracted;happy:1"), backends, cfg);
    CHECK(distracted.sample.ci == 0.0);
    CHECK(distracted.sample.category == EngagementCategory::NotEngaged);
    CHECK(emotion_stub(backends).calls() == calls_before);

    const auto noeyes = process_frame(tagged_frame(3, "noeyes;focused"), backends, cfg);
    CHECK(noeyes.sample.category == EngagementCategory::NotEngaged);
}

TEST_CASE("backend failures degrade the frame instead of aborting") {
    PipelineConfig cfg;
    auto backends = stub_backends();
    backends.emotion = std::make_unique<ThrowingEmotion>();
    const auto no_emotion = process_frame(tagged_frame(0, "focused"), backends, cfg);
    CHECK(no_emotion.sample.degraded);
    CHECK(no_emotion.sample.category == EngagementCategory::NominallyEngaged);
    CHECK(no_emotion.sample.ci == 0.0);
    CHECK_FALSE(no_emotion.emotion_ci.has_value());

    backends.attention = std::make_unique<ThrowingAttention>();
    const auto no_attention = process_frame(tagged_frame(1, "focused"), backends, cfg);
    CHECK(no_attention.sample.degraded);
    CHECK(no_attention.sample.category == EngagementCategory::NotEngaged);

    const Frame empty{2, 0, cv::Mat(), "focused"};
    CHECK(process_frame(empty, stub_backends(), cfg).sample.degraded);
}

TEST_CASE("events run: sample count and stride") {
    testsupport::TempDir dir("run");
    const auto events = random_events(200, 42);
    write_event_csv(events, dir.file("e.csv"));
    PipelineConfig cfg;
    cfg.input = dir.file("e.csv");
    CHECK(run_session(cfg).report.samples.size() == 200);
    for (int k : {1, 2, 3, 7, 200, 500}) {
        cfg.stride = k;
        const auto result = run_session(cfg);
        CHECK(result.report.samples.size() == static_cast<std::size_t>((200 + k - 1) / k));
        CHECK(result.stats.frames_seen == 200);
    }
}

TEST_CASE("golden events report") {
    testsupport::TempDir dir("golden");
    auto cfg = load_config(testsupport::fixture("events/golden.conf"));
    cfg.input = testsupport::fixture("events/golden_events.csv");
    cfg.report_path = dir.file("report.json");
    cfg.plot_dir = dir.file("plots");
    const auto result = run_session(cfg);
    const auto got = nlohmann::json::parse(slurp(cfg.report_path));
    const auto want = nlohmann::json::parse(slurp(testsupport::fixture("events/golden_report.json")));
    CHECK(testsupport::json_close(without_meta(got), without_meta(want)));
    CHECK(got["meta"]["frames_processed"] == 12);
    CHECK(result.plots.size() == 3);
    for (const auto& p : result.plots) CHECK(std::filesystem::exists(p + ".csv"));
}

TEST_CASE("reports are byte-identical across runs apart from meta") {
    testsupport::TempDir dir("det");
    write_event_csv(random_events(300, 9), dir.file("e.csv"));
    PipelineConfig cfg;
    cfg.input = dir.file("e.csv");
    cfg.debounce_frames = 3;
    cfg.report_path = dir.file("a.json");
    run_session(cfg);
    cfg.report_path = dir.file("b.json");
    run_session(cfg);
    const auto a = without_meta(nlohmann::json::parse(slurp(dir.file("a.json"))));
    const auto b = without_meta(nlohmann::json::parse(slurp(dir.file("b.json"))));
    CHECK(a.dump(2) == b.dump(2));
}

TEST_CASE("run exit codes") {
    std::ostringstream log;
    PipelineConfig cfg;
    cfg.input = testsupport::fixture("events/golden_events.csv");
    CHECK(run(cfg, log) == 0);
    cfg.attention_backend = "cnn";
    CHECK(run(cfg, log) == 1);
    cfg.attention_backend = "stub";
    cfg.input = "/nonexistent/events.csv";
    CHECK(run(cfg, log) == 2);
    cfg.mode = SourceMode::Video;
    cfg.face_detector = "stub";
    cfg.input = "/nonexistent/video.avi";
    CHECK(run(cfg, log) == 2);
    cfg.mode = SourceMode::Video;
    cfg.face_detector = "cascade";
    cfg.face_cascade_path = "/nonexistent/cascade.xml";
    CHECK(run(cfg, log) == 1);
    testsupport::TempDir dir("empty");
    std::ofstream(dir.file("h.csv")) << kEventCsvHeader << "\n";
    cfg = PipelineConfig{};
    cfg.input = dir.file("h.csv");
    CHECK(run(cfg, log) == 3);  // empty session
}

TEST_CASE("video and live sources") {
    testsupport::TempDir dir("video");
    const std::string path = dir.file("clip.avi");
    constexpr int kFrames = 23;
    {
        cv::VideoWriter writer(path, cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 25.0, cv::Size(96, 96));
        REQUIRE(writer.isOpened());
        for (int i = 0; i < kFrames; ++i) writer.write(cv::Mat(96, 96, CV_8UC3, cv::Scalar(i * 10 % 255, 80, 120)));
    }
    PipelineConfig cfg;
    cfg.mode = SourceMode::Video;
    cfg.input = path;
    cfg.face_detector = "stub";
    cfg.eye_detector = "stub";
    for (int k : {1, 4}) {
        cfg.stride = k;
        const auto result = run_session(cfg);
        CHECK(result.stats.frames_seen == kFrames);
        CHECK(result.report.samples.size() == static_cast<std::size_t>((kFrames + k - 1) / k));
        // untagged frames score the stub's fallback, i.e. distracted
        for (const auto& s : result.report.samples) CHECK(s.category == EngagementCategory::NotEngaged);
    }

    cfg.mode = SourceMode::Live;
    cfg.stride = 2;
    cfg.queue_capacity = 2;
    const auto live = run_session(cfg);
    CHECK(live.stats.frames_seen == kFrames);
    CHECK(live.stats.frames_processed + live.stats.frames_dropped == (kFrames + 1) / 2);
    for (std::size_t i = 1; i < live.report.samples.size(); ++i) {
        CHECK(live.report.samples[i].frame_index > live.report.samples[i - 1].frame_index);
    }

    cfg.max_frames = 3;
    cfg.queue_capacity = 64;
    CHECK(run_session(cfg).report.samples.size() == 3);
}
