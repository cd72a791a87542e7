#include "engage/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <opencv2/videoio.hpp>

#include "engage/errors.hpp"

namespace engage {

std::optional<SourceMode> parse_source_mode(std::string_view name) {
    if (name == "live") return SourceMode::Live;
    if (name == "video") return SourceMode::Video;
    if (name == "events") return SourceMode::Events;
    return std::nullopt;
}

std::string_view to_string(SourceMode mode) {
    switch (mode) {
        case SourceMode::Live: return "live";
        case SourceMode::Video: return "video";
        case SourceMode::Events: return "events";
    }
    return "events";
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
std::optional<T> parse_num(std::string_view s) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(v)) return std::nullopt;
    }
    return v;
}

template <typename T>
T config_num(const std::string& key, const std::string& value, std::size_t line) {
    const auto v = parse_num<T>(value);
    if (!v) throw ConfigError("line " + std::to_string(line) + ": `" + key + "` expects a number, got `" + value + "`");
    return *v;
}

// "label:start-end" entries separated by commas.
std::vector<SessionWindow> parse_windows(const std::string& value, std::size_t line) {
    std::vector<SessionWindow> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.rfind(':');
        const auto dash = item.find('-', colon == std::string::npos ? 0 : colon);
        const auto bad = [&] {
            return ConfigError("line " + std::to_string(line) + ": window `" + item + "` is not label:start-end");
        };
        if (colon == std::string::npos || dash == std::string::npos || colon == 0) throw bad();
        const auto start = parse_num<std::int64_t>(trim(std::string_view(item).substr(colon + 1, dash - colon - 1)));
        const auto end = parse_num<std::int64_t>(trim(std::string_view(item).substr(dash + 1)));
        if (!start || !end || *start < 0 || *end < *start) throw bad();
        out.push_back({trim(std::string_view(item).substr(0, colon)), *start, *end});
    }
    return out;
}

bool known(const std::string& v, std::initializer_list<const char*> options) {
    return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

}  // namespace

void PipelineConfig::validate() const {
    if (input.empty()) throw ConfigError("no input source given");
    if (!known(face_detector, {"cascade", "stub"})) throw ConfigError("unknown face_detector `" + face_detector + "`");
    if (!known(eye_detector, {"projection", "cascade", "stub"})) {
        throw ConfigError("unknown eye_detector `" + eye_detector + "`");
    }
    if (!known(attention_backend, {"stub", "cnn"})) {
        throw ConfigError("unknown attention_backend `" + attention_backend + "`");
    }
    if (!known(emotion_backend, {"stub", "cnn"})) throw ConfigError("unknown emotion_backend `" + emotion_backend + "`");
    if (attention_backend == "cnn" && attention_model_path.empty()) {
        throw ConfigError("attention_backend = cnn needs attention_model_path");
    }
    if (emotion_backend == "cnn" && emotion_model_path.empty()) {
        throw ConfigError("emotion_backend = cnn needs emotion_model_path");
    }
    if (mode != SourceMode::Events) {
        if (face_detector == "cascade" && face_cascade_path.empty()) {
            throw ConfigError("face_detector = cascade needs face_cascade_path");
        }
        if (eye_detector == "cascade" && eye_cascade_path.empty()) {
            throw ConfigError("eye_detector = cascade needs eye_cascade_path");
        }
    }
    if (!(attention_threshold >= 0.0 && attention_threshold <= 1.0)) {
        throw ConfigError("attention_threshold must lie in [0,1]");
    }
    if (!(engagement_threshold >= 0.0 && engagement_threshold <= 100.0)) {
        throw ConfigError("engagement_threshold must lie in [0,100]");
    }
    if (debounce_frames < 1) throw ConfigError("debounce_frames must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (smoothing_window < 0) throw ConfigError("smoothing_window must be >= 0");
    if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
    if (max_frames < 0) throw ConfigError("max_frames must be >= 0");
    if (!weights.complete()) throw ConfigError("emotion weights are incomplete");
    if (!known(plot_format, {"png", "svg", "jpg"})) throw ConfigError("unknown plot_format `" + plot_format + "`");
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::string section;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section != "emotion_weights") {
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section `" + section + "`");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);

        if (section == "emotion_weights") {
            const auto label = parse_emotion_label(key);
            if (!label) throw ConfigError("line " + std::to_string(line_no) + ": unknown emotion `" + key + "`");
            const double w = config_num<double>(key, value, line_no);
            if (w < 0.0 || w > 1.0) throw ConfigError("line " + std::to_string(line_no) + ": weight outside [0,1]");
            cfg.weights.set(*label, w);
            continue;
        }

        if (key == "mode") {
            const auto m = parse_source_mode(value);
            if (!m) throw ConfigError("line " + std::to_string(line_no) + ": unknown mode `" + value + "`");
            cfg.mode = *m;
        } else if (key == "input") {
            cfg.input = value;
        } else if (key == "face_detector") {
            cfg.face_detector = value;
        } else if (key == "face_cascade_path") {
            cfg.face_cascade_path = value;
        } else if (key == "eye_detector") {
            cfg.eye_detector = value;
        } else if (key == "eye_cascade_path") {
            cfg.eye_cascade_path = value;
        } else if (key == "attention_backend") {
            cfg.attention_backend = value;
        } else if (key == "attention_model_path") {
            cfg.attention_model_path = value;
        } else if (key == "emotion_backend") {
            cfg.emotion_backend = value;
        } else if (key == "emotion_model_path") {
            cfg.emotion_model_path = value;
        } else if (key == "attention_threshold") {
            cfg.attention_threshold = config_num<double>(key, value, line_no);
        } else if (key == "engagement_threshold") {
            cfg.engagement_threshold = config_num<double>(key, value, line_no);
        } else if (key == "debounce_frames") {
            cfg.debounce_frames = config_num<int>(key, value, line_no);
        } else if (key == "stride") {
            cfg.stride = config_num<int>(key, value, line_no);
        } else if (key == "smoothing_window") {
            cfg.smoothing_window = config_num<int>(key, value, line_no);
        } else if (key == "windows") {
            cfg.windows = parse_windows(value, line_no);
        } else if (key == "queue_capacity") {
            cfg.queue_capacity = config_num<std::size_t>(key, value, line_no);
        } else if (key == "max_frames") {
            cfg.max_frames = config_num<std::int64_t>(key, value, line_no);
        } else if (key == "report") {
            cfg.report_path = value;
        } else if (key == "plot_dir") {
            cfg.plot_dir = value;
        } else if (key == "plot_format") {
            cfg.plot_format = value;
        } else {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key `" + key + "`");
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    PipelineConfig cfg = parse_config(ss.str());
    // relative paths inside the file resolve against its directory
    const auto base = std::filesystem::path(path).parent_path();
    for (auto* p : {&cfg.face_cascade_path, &cfg.eye_cascade_path, &cfg.attention_model_path, &cfg.emotion_model_path}) {
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Event CSV

namespace {

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.push_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::vector<FrameEvent> parse_event_csv(std::istream& in) {
    std::string line;
    std::size_t row = 1;
    if (!std::getline(in, line)) throw ParseError(row, "header");
    {
        const auto cells = split_cells(line);
        const auto expected = split_cells(kEventCsvHeader);
        if (cells != expected) throw ParseError(row, "header");
    }
    std::vector<FrameEvent> out;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_cells(line);
        if (cells.size() != 3 + kEmotionCount) throw ParseError(row, "columns");
        FrameEvent e;
        const auto frame = parse_num<std::int64_t>(cells[0]);
        if (!frame || *frame < 0) throw ParseError(row, "frame");
        if (!out.empty() && *frame <= out.back().frame_index) throw ParseError(row, "frame");
        const auto ts = parse_num<std::int64_t>(cells[1]);
        if (!ts || *ts < 0) throw ParseError(row, "timestamp_ms");
        const auto c = parse_num<double>(cells[2]);
        if (!c || *c < 0.0 || *c > 1.0) throw ParseError(row, "c");
        e.frame_index = *frame;
        e.timestamp_ms = *ts;
        e.c = *c;
        for (std::size_t i = 0; i < kEmotionCount; ++i) {
            const auto p = parse_num<double>(cells[3 + i]);
            if (!p) throw ParseError(row, "distribution");
            e.p[i] = *p;
        }
        if (!EmotionDistribution::is_valid(e.p)) throw ParseError(row, "distribution");
        out.push_back(e);
    }
    return out;
}

std::vector<FrameEvent> parse_event_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open events file: " + path);
    return parse_event_csv(in);
}

void write_event_csv(const std::vector<FrameEvent>& events, std::ostream& out) {
    out << kEventCsvHeader << '\n';
    for (const auto& e : events) {
        out << e.frame_index << ',' << e.timestamp_ms << ',' << format_double(e.c);
        for (double p : e.p) out << ',' << format_double(p);
        out << '\n';
    }
}

void write_event_csv(const std::vector<FrameEvent>& events, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write events file: " + path);
    write_event_csv(events, out);
    if (!out) throw IoError("failed writing events file: " + path);
}

// ---------------------------------------------------------------------------
// Per-frame processing

Backends make_backends(const PipelineConfig& config) {
    Backends b;
    if (config.face_detector == "stub") {
        b.face = std::make_unique<StubFaceDetector>();
    } else {
        b.face = std::make_unique<CascadeFaceDetector>(config.face_cascade_path);
    }
    if (config.eye_detector == "stub") {
        b.eyes = std::make_unique<StubEyeDetector>();
    } else if (config.eye_detector == "cascade") {
        b.eyes = std::make_unique<CascadeEyeDetector>(config.eye_cascade_path);
    } else {
        b.eyes = std::make_unique<ProjectionEyeLocator>();
    }
    if (config.attention_backend == "cnn") {
        b.attention = std::make_unique<CnnAttentionBackend>(config.attention_model_path);
    } else {
        b.attention = std::make_unique<StubAttentionBackend>();
    }
    if (config.emotion_backend == "cnn") {
        b.emotion = std::make_unique<CnnEmotionBackend>(config.emotion_model_path);
    } else {
        b.emotion = std::make_unique<StubEmotionBackend>();
    }
    return b;
}

namespace {

ProcessedFrame distracted_frame(const Frame& frame, bool degraded) {
    ProcessedFrame out;
    out.sample.frame_index = frame.index;
    out.sample.timestamp_ms = frame.timestamp_ms;
    out.sample.attention = {AttentionState::Distracted, 0};
    out.sample.ci = 0.0;
    out.sample.category = EngagementCategory::NotEngaged;
    out.sample.degraded = degraded;
    return out;
}

}  // namespace

ProcessedFrame process_frame(const Frame& frame, const Backends& backends, const PipelineConfig& config) {
    std::optional<FaceRegion> face;
    std::optional<EyeRegion> eyes;
    try {
        face = detect_largest_face(frame, *backends.face);
        if (face) eyes = locate_eye_region(frame, *face, *backends.eyes);
    } catch (const std::exception&) {
        return distracted_frame(frame, true);
    }
    if (!face || !eyes) return distracted_frame(frame, false);

    AttentionResult attention;
    try {
        const auto score = classify_attention(preprocess_attention_patch(frame, *eyes), *backends.attention);
        attention = binarize_attention(score, config.attention_threshold);
    } catch (const std::exception&) {
        return distracted_frame(frame, true);
    }

    std::optional<EmotionDistribution> dist;
    if (attention.focused()) {
        try {
            dist = predict_emotion_distribution(preprocess_emotion_patch(frame, *face), *backends.emotion);
        } catch (const std::exception&) {
            dist.reset();
        }
    }

    ProcessedFrame out;
    out.sample = frame_verdict(attention, dist, config.weights, frame.index, config.engagement_threshold);
    out.sample.timestamp_ms = frame.timestamp_ms;
    if (dist) out.emotion_ci = out.sample.ci;
    return out;
}

ProcessedFrame process_event(const FrameEvent& event, const PipelineConfig& config) {
    const auto attention = binarize_attention(AttentionScore(event.c), config.attention_threshold);
    const EmotionDistribution dist(event.p);
    ProcessedFrame out;
    out.sample = frame_verdict(attention, dist, config.weights, event.frame_index, config.engagement_threshold);
    out.sample.timestamp_ms = event.timestamp_ms;
    out.emotion_ci = compute_ci(dominant_emotion(dist), config.weights);
    return out;
}

// ---------------------------------------------------------------------------
// Sources

namespace {

struct Collected {
    std::vector<ConcentrationSample> samples;
    std::vector<std::optional<double>> emotion_ci;

    void add(ProcessedFrame f) {
        samples.push_back(std::move(f.sample));
        emotion_ci.push_back(f.emotion_ci);
    }
};

bool stopped(const std::atomic<bool>* stop) { return stop != nullptr && stop->load(); }

void run_events(const PipelineConfig& config, Collected& out, RunStats& stats) {
    std::ifstream in(config.input);
    if (!in) throw SourceOpenError("cannot open events file: " + config.input);
    const auto events = parse_event_csv(in);
    for (std::size_t i = 0; i < events.size(); ++i) {
        ++stats.frames_seen;
        if (i % static_cast<std::size_t>(config.stride) != 0) continue;
        out.add(process_event(events[i], config));
        ++stats.frames_processed;
    }
}

std::int64_t frame_time(cv::VideoCapture& cap, std::int64_t index, double fps) {
    const double ms = cap.get(cv::CAP_PROP_POS_MSEC);
    if (ms > 0.0) return static_cast<std::int64_t>(std::llround(ms));
    if (fps > 0.0) return static_cast<std::int64_t>(std::llround(static_cast<double>(index) * 1000.0 / fps));
    return 0;
}

void run_video(const PipelineConfig& config, const Backends& backends, Collected& out, RunStats& stats,
               const std::atomic<bool>* stop) {
    cv::VideoCapture cap;
    try {
        cap.open(config.input);
    } catch (const cv::Exception&) {
    }
    if (!cap.isOpened()) throw SourceOpenError("cannot open video: " + config.input);
    const double fps = cap.get(cv::CAP_PROP_FPS);
    cv::Mat image;
    std::int64_t index = 0;
    while (!stopped(stop) && cap.read(image)) {
        ++stats.frames_seen;
        const std::int64_t ts = frame_time(cap, index, fps);
        if (index % config.stride == 0) {
            Frame frame{index, ts, image, {}};
            out.add(process_frame(frame, backends, config));
            ++stats.frames_processed;
            if (config.max_frames > 0 && stats.frames_processed >= config.max_frames) break;
        }
        ++index;
    }
}

// Bounded single-producer single-consumer queue. Pushing into a full queue fails.
class FrameQueue {
public:
    explicit FrameQueue(std::size_t capacity) : capacity_(capacity) {}

    bool try_push(Frame frame) {
        {
            std::lock_guard lock(mutex_);
            if (items_.size() >= capacity_) return false;
            items_.push_back(std::move(frame));
        }
        cv_.notify_one();
        return true;
    }

    std::optional<Frame> pop() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        Frame f = std::move(items_.front());
        items_.pop_front();
        return f;
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Frame> items_;
    bool closed_ = false;
};

void run_live(const PipelineConfig& config, const Backends& backends, Collected& out, RunStats& stats,
              const std::atomic<bool>* stop) {
    cv::VideoCapture cap;
    const auto camera = parse_num<int>(config.input);
    try {
        if (camera) {
            cap.open(*camera);
        } else {
            cap.open(config.input);
        }
    } catch (const cv::Exception&) {
    }
    if (!cap.isOpened()) throw SourceOpenError("cannot open live source: " + config.input);

    FrameQueue queue(config.queue_capacity);
    std::atomic<bool> consumer_done{false};
    std::atomic<std::int64_t> seen{0};
    std::atomic<std::int64_t> dropped{0};
    std::atomic<std::int64_t> queued{0};

    std::thread producer([&] {
        const auto start = std::chrono::steady_clock::now();
        cv::Mat image;
        std::int64_t index = 0;
        while (!stopped(stop) && !consumer_done.load() && cap.read(image)) {
            seen.fetch_add(1);
            if (index % config.stride == 0) {
                const auto ts = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
                if (queue.try_push(Frame{index, ts, image.clone(), {}})) {
                    queued.fetch_add(1);
                } else {
                    dropped.fetch_add(1);
                }
                if (config.max_frames > 0 && queued.load() >= config.max_frames) break;
            }
            ++index;
        }
        queue.close();
    });

    try {
        while (auto frame = queue.pop()) {
            out.add(process_frame(*frame, backends, config));
            ++stats.frames_processed;
        }
    } catch (...) {
        consumer_done = true;
        queue.close();
        producer.join();
        throw;
    }
    producer.join();
    stats.frames_seen = seen.load();
    stats.frames_dropped = dropped.load();
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

}  // namespace

RunResult run_session(const PipelineConfig& config, const std::atomic<bool>* stop) {
    config.validate();

    Collected collected;
    RunStats stats;
    nlohmann::json backends_meta;
    if (config.mode == SourceMode::Events) {
        run_events(config, collected, stats);
        backends_meta = "events";
    } else {
        const Backends backends = make_backends(config);
        backends_meta = {{"face", backends.face->id()},
                         {"eyes", backends.eyes->id()},
                         {"attention", backends.attention->id()},
                         {"emotion", backends.emotion->id()}};
        if (config.mode == SourceMode::Video) {
            run_video(config, backends, collected, stats, stop);
        } else {
            run_live(config, backends, collected, stats, stop);
        }
    }
    for (const auto& s : collected.samples) stats.frames_degraded += s.degraded ? 1 : 0;

    nlohmann::json weights;
    for (auto label : kEmotionOrder) weights[std::string(to_string(label))] = config.weights.at(label);

    ReportOptions options;
    options.debounce = config.debounce_frames;
    options.smoothing_window = config.smoothing_window;
    options.meta = {{"generated_at", utc_now()},
                    {"mode", std::string(to_string(config.mode))},
                    {"input", config.input},
                    {"backends", backends_meta},
                    {"stride", config.stride},
                    {"attention_threshold", config.attention_threshold},
                    {"engagement_threshold", config.engagement_threshold},
                    {"debounce_frames", config.debounce_frames},
                    {"emotion_weights", weights},
                    {"frames_seen", stats.frames_seen},
                    {"frames_processed", stats.frames_processed},
                    {"frames_dropped", stats.frames_dropped},
                    {"frames_degraded", stats.frames_degraded}};

    RunResult result;
    result.report = build_session_report(std::move(collected.samples), config.windows, options,
                                         std::move(collected.emotion_ci));
    result.stats = stats;

    if (!config.report_path.empty()) {
        const auto parent = std::filesystem::path(config.report_path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        write_report(result.report, config.report_path);
    }
    if (!config.plot_dir.empty()) {
        std::filesystem::create_directories(config.plot_dir);
        for (auto mode : {PlotMode::AttentionOnly, PlotMode::EmotionOnly, PlotMode::Combined}) {
            const auto path =
                (std::filesystem::path(config.plot_dir) / (std::string(to_string(mode)) + "." + config.plot_format))
                    .string();
            render_timeline_plot(result.report, path, mode);
            result.plots.push_back(path);
        }
    }
    return result;
}

int run(const PipelineConfig& config, std::ostream& log, const std::atomic<bool>* stop) {
    try {
        const auto result = run_session(config, stop);
        log << "processed " << result.stats.frames_processed << " of " << result.stats.frames_seen << " frames";
        if (result.stats.frames_dropped > 0) log << ", dropped " << result.stats.frames_dropped;
        if (result.stats.frames_degraded > 0) log << ", degraded " << result.stats.frames_degraded;
        log << ", alerts " << result.report.alerts.size() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ModelLoadError& e) {
        log << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DetectorUnavailable& e) {
        log << "config error: " << e.what() << '\n';
        return 1;
    } catch (const SourceOpenError& e) {
        log << "source error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace engage
