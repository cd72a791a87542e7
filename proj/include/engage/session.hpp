#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/concentration.hpp"

namespace engage {

enum class AlertKind { NotEngagedRun };

/// A maximal run of consecutive NotEngaged samples at least `debounce` long.
struct AlertEvent {
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    AlertKind kind = AlertKind::NotEngagedRun;

    friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

inline constexpr int kDefaultDebounceFrames = 30;

/// One event per maximal run of >= debounce consecutive NotEngaged samples.
/// Runs are taken over consecutive samples of the series.
std::vector<AlertEvent> update_alerts(std::span<const ConcentrationSample> samples, int debounce);

/// Single-writer accumulator for a live stream. Samples must arrive in strictly
/// increasing frame order. `push` returns true on the sample that makes the
/// current NotEngaged run reach the debounce length, i.e. when an alert fires.
class SessionRecorder {
public:
    explicit SessionRecorder(int debounce = kDefaultDebounceFrames);

    bool push(ConcentrationSample sample);
    const std::vector<ConcentrationSample>& samples() const { return samples_; }
    /// Closed and open runs alike, identical to update_alerts over samples().
    std::vector<AlertEvent> alerts() const;

private:
    int debounce_;
    std::vector<ConcentrationSample> samples_;
    std::vector<AlertEvent> closed_;
    std::optional<std::int64_t> run_start_;
    std::int64_t run_length_ = 0;
};

/// Inclusive frame range, e.g. the time spent on one quiz question.
struct SessionWindow {
    std::string label;
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
};

/// Mean ci over samples whose frame index falls in [start, end]. Throws EmptyWindow when none do.
double window_mean_ci(std::span<const ConcentrationSample> samples, const SessionWindow& window);

struct QuizRecord {
    std::string student_id;
    std::vector<int> scores;        // 0/1 per question
    std::vector<double> window_ci;  // mean ci per question
    int total_score = 0;
    double total_ci = 0.0;

    /// Validates binary scores and equal lengths; totals are the score sum and the mean of window_ci.
    static QuizRecord make(std::string student_id, std::vector<int> scores, std::vector<double> window_ci);
};

enum class DeviationKind { Population, Sample };

struct ColumnStats {
    double mean = 0.0;
    double mode = 0.0;  // most frequent value, smallest on ties
    double stddev = 0.0;
};

struct TableSummary {
    std::vector<ColumnStats> question_score;
    std::vector<ColumnStats> question_ci;
    ColumnStats total_score;
    ColumnStats total_ci;
};

ColumnStats column_stats(std::span<const double> values, DeviationKind deviation = DeviationKind::Population);

/// Column-wise summary of a quiz table. Requires >= 1 record and equal question counts.
TableSummary aggregate_quiz_table(std::span<const QuizRecord> records,
                                  DeviationKind deviation = DeviationKind::Population);

/// Share of students scoring >= score_threshold whose total ci is also >= ci_threshold.
/// Throws NoQualifyingStudents when nobody reaches score_threshold.
double engagement_score_correlation(std::span<const QuizRecord> records, int score_threshold = 3,
                                    double ci_threshold = 50.0);

/// `student_id,q1_score,q1_ci,...` with any number of questions. Strict: throws ParseError.
std::vector<QuizRecord> read_quiz_csv(const std::string& path);

struct ReportOptions {
    int debounce = kDefaultDebounceFrames;
    /// Trailing moving-average length for `ci_smoothed`; 0 or 1 disables it.
    int smoothing_window = 0;
    nlohmann::json meta = nlohmann::json::object();
};

struct SessionReport {
    std::vector<ConcentrationSample> samples;
    /// Emotion-only ci per sample when a distribution was observed (same length as samples).
    std::vector<std::optional<double>> emotion_ci;
    std::vector<AlertEvent> alerts;
    std::vector<SessionWindow> windows;
    std::map<std::string, std::optional<double>> window_aggregates;
    std::map<EngagementCategory, double> occupancy;
    std::vector<double> ci_smoothed;  // empty unless smoothing is enabled
    nlohmann::json meta = nlohmann::json::object();
};

/// Throws EmptySession on an empty series. `emotion_ci` may be empty.
SessionReport build_session_report(std::vector<ConcentrationSample> samples, std::vector<SessionWindow> windows,
                                   const ReportOptions& options, std::vector<std::optional<double>> emotion_ci = {});

/// Top-level keys: samples, alerts, windows, occupancy, meta.
nlohmann::json report_to_json(const SessionReport& report);

void write_report(const SessionReport& report, const std::string& path);

enum class PlotMode { AttentionOnly, EmotionOnly, Combined };

std::optional<PlotMode> parse_plot_mode(std::string_view name);
std::string_view to_string(PlotMode mode);

/// Plotted values per sample; absent where the mode has no value for that frame.
std::vector<std::optional<double>> timeline_series(const SessionReport& report, PlotMode mode);

/// Writes an SVG (".svg" extension) or raster image (any other OpenCV-supported
/// extension) of ci percent against frame index, plus `<output_path>.csv` with
/// the plotted `frame,value` pairs. Throws IoError.
void render_timeline_plot(const SessionReport& report, const std::string& output_path, PlotMode mode);

}  // namespace engage
