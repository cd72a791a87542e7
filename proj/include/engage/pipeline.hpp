#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "engage/attention.hpp"
#include "engage/concentration.hpp"
#include "engage/emotion.hpp"
#include "engage/face_eyes.hpp"
#include "engage/session.hpp"

namespace engage {

enum class SourceMode { Live, Video, Events };

std::optional<SourceMode> parse_source_mode(std::string_view name);
std::string_view to_string(SourceMode mode);

struct PipelineConfig {
    SourceMode mode = SourceMode::Events;
    std::string input;  // camera index, video path or events CSV path

    std::string face_detector = "cascade";  // cascade | stub
    std::string face_cascade_path;
    std::string eye_detector = "projection";  // projection | cascade | stub
    std::string eye_cascade_path;
    std::string attention_backend = "stub";  // stub | cnn
    std::string attention_model_path;
    std::string emotion_backend = "stub";  // stub | cnn
    std::string emotion_model_path;

    EmotionWeights weights = EmotionWeights::defaults();
    double attention_threshold = kDefaultAttentionThreshold;
    double engagement_threshold = kDefaultEngagementThreshold;
    int debounce_frames = kDefaultDebounceFrames;
    int stride = 1;
    int smoothing_window = 0;
    std::vector<SessionWindow> windows;

    // live mode
    std::size_t queue_capacity = 8;
    std::int64_t max_frames = 0;  // 0 = until the source ends or the run is interrupted

    std::string report_path;
    std::string plot_dir;
    std::string plot_format = "png";

    /// Throws ConfigError on out-of-range values, unknown backends or a cnn backend without a model path.
    void validate() const;
};

/// Flat `key = value` lines plus an `[emotion_weights]` table of `label = weight`.
/// `#` starts a comment; string values may be double-quoted. Throws ConfigError.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// One pre-extracted frame: attention confidence and the emotion distribution.
struct FrameEvent {
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
    double c = 0.0;
    std::array<double, kEmotionCount> p{};

    friend bool operator==(const FrameEvent&, const FrameEvent&) = default;
};

inline constexpr const char* kEventCsvHeader =
    "frame,timestamp_ms,c,p_angry,p_disgust,p_fear,p_happy,p_sad,p_surprise,p_neutral";

/// Strict parse. Throws ParseError(row, reason) with reason one of
/// "header", "columns", "frame", "timestamp_ms", "c", "distribution"; IoError when unreadable.
std::vector<FrameEvent> parse_event_csv(const std::string& path);
std::vector<FrameEvent> parse_event_csv(std::istream& in);

/// Shortest round-trip number formatting, so parse(write(x)) == x.
void write_event_csv(const std::vector<FrameEvent>& events, std::ostream& out);
void write_event_csv(const std::vector<FrameEvent>& events, const std::string& path);

struct Backends {
    std::unique_ptr<FaceDetectorBackend> face;
    std::unique_ptr<EyeDetectorBackend> eyes;
    std::unique_ptr<AttentionBackend> attention;
    std::unique_ptr<EmotionBackend> emotion;
};

/// Builds the configured backends. Throws ConfigError, DetectorUnavailable or ModelLoadError.
Backends make_backends(const PipelineConfig& config);

struct ProcessedFrame {
    ConcentrationSample sample;
    /// ci the emotion channel alone would give, when a distribution was observed.
    std::optional<double> emotion_ci;
};

/// face -> eyes -> attention -> (Focused only) emotion -> verdict. No face or no eyes
/// yields Distracted. Backend failures never escape: the frame is flagged degraded.
ProcessedFrame process_frame(const Frame& frame, const Backends& backends, const PipelineConfig& config);

/// Same verdict for a pre-extracted event; the classifiers are bypassed.
ProcessedFrame process_event(const FrameEvent& event, const PipelineConfig& config);

struct RunStats {
    std::int64_t frames_seen = 0;       // frames read from the source
    std::int64_t frames_processed = 0;  // after stride and drops
    std::int64_t frames_dropped = 0;    // live mode: queue full
    std::int64_t frames_degraded = 0;
};

struct RunResult {
    SessionReport report;
    RunStats stats;
    std::vector<std::string> plots;
};

/// Streams the source to completion (or until `stop` is set), writes the report
/// and plots when paths are configured. Throws ConfigError, SourceOpenError, ParseError,
/// EmptySession and IoError.
RunResult run_session(const PipelineConfig& config, const std::atomic<bool>* stop = nullptr);

/// Wraps run_session for the CLI: 0 on success, 1 ConfigError (also an unloadable model or
/// cascade), 2 SourceOpenError, 3 any other failure.
int run(const PipelineConfig& config, std::ostream& log, const std::atomic<bool>* stop = nullptr);

}  // namespace engage
