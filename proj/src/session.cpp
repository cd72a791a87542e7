#include "engage/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "engage/errors.hpp"
#include "engage/plot.hpp"

namespace engage {

// ---------------------------------------------------------------------------
// Alerts

std::vector<AlertEvent> update_alerts(std::span<const ConcentrationSample> samples, int debounce) {
    if (debounce < 1) throw std::invalid_argument("debounce must be >= 1");
    std::vector<AlertEvent> events;
    std::size_t i = 0;
    while (i < samples.size()) {
        if (samples[i].category != EngagementCategory::NotEngaged) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < samples.size() && samples[j + 1].category == EngagementCategory::NotEngaged) ++j;
        if (j - i + 1 >= static_cast<std::size_t>(debounce)) {
            events.push_back({samples[i].frame_index, samples[j].frame_index, AlertKind::NotEngagedRun});
        }
        i = j + 1;
    }
    return events;
}

SessionRecorder::SessionRecorder(int debounce) : debounce_(debounce) {
    if (debounce < 1) throw std::invalid_argument("debounce must be >= 1");
}

bool SessionRecorder::push(ConcentrationSample sample) {
    if (!samples_.empty() && sample.frame_index <= samples_.back().frame_index) {
        throw std::invalid_argument("samples must arrive in increasing frame order");
    }
    bool fired = false;
    if (sample.category == EngagementCategory::NotEngaged) {
        if (!run_start_) {
            run_start_ = sample.frame_index;
            run_length_ = 0;
        }
        ++run_length_;
        fired = run_length_ == debounce_;
    } else if (run_start_) {
        if (run_length_ >= debounce_) closed_.push_back({*run_start_, samples_.back().frame_index});
        run_start_.reset();
        run_length_ = 0;
    }
    samples_.push_back(std::move(sample));
    return fired;
}

std::vector<AlertEvent> SessionRecorder::alerts() const {
    auto out = closed_;
    if (run_start_ && run_length_ >= debounce_) out.push_back({*run_start_, samples_.back().frame_index});
    return out;
}

// ---------------------------------------------------------------------------
// Windows and quiz tables

double window_mean_ci(std::span<const ConcentrationSample> samples, const SessionWindow& window) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        if (s.frame_index >= window.start_frame && s.frame_index <= window.end_frame) {
            sum += s.ci;
            ++count;
        }
    }
    if (count == 0) throw EmptyWindow("window `" + window.label + "` has no samples");
    return sum / static_cast<double>(count);
}

QuizRecord QuizRecord::make(std::string student_id, std::vector<int> scores, std::vector<double> window_ci) {
    if (scores.size() != window_ci.size()) throw std::invalid_argument("scores and window ci differ in length");
    if (scores.empty()) throw std::invalid_argument("quiz record has no questions");
    QuizRecord r;
    r.student_id = std::move(student_id);
    for (int s : scores) {
        if (s != 0 && s != 1) throw std::invalid_argument("quiz scores must be 0 or 1");
        r.total_score += s;
    }
    double sum = 0.0;
    for (double c : window_ci) {
        if (!(c >= 0.0 && c <= 100.0)) throw std::invalid_argument("window ci outside [0,100]");
        sum += c;
    }
    r.total_ci = sum / static_cast<double>(window_ci.size());
    r.scores = std::move(scores);
    r.window_ci = std::move(window_ci);
    return r;
}

ColumnStats column_stats(std::span<const double> values, DeviationKind deviation) {
    if (values.empty()) throw std::invalid_argument("column_stats needs at least one value");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    double stddev = 0.0;
    if (values.size() > 1) stddev = std::sqrt(sq / (deviation == DeviationKind::Sample ? n - 1.0 : n));

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double mode = sorted.front();
    std::size_t best = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        if (j - i > best) {  // strict: the smaller value keeps ties
            best = j - i;
            mode = sorted[i];
        }
        i = j;
    }
    return {mean, mode, stddev};
}

TableSummary aggregate_quiz_table(std::span<const QuizRecord> records, DeviationKind deviation) {
    if (records.empty()) throw std::invalid_argument("quiz table is empty");
    const std::size_t questions = records.front().scores.size();
    for (const auto& r : records) {
        if (r.scores.size() != questions || r.window_ci.size() != questions) {
            throw std::invalid_argument("quiz records have different question counts");
        }
    }
    TableSummary out;
    std::vector<double> column(records.size());
    for (std::size_t q = 0; q < questions; ++q) {
        for (std::size_t i = 0; i < records.size(); ++i) column[i] = records[i].scores[q];
        out.question_score.push_back(column_stats(column, deviation));
        for (std::size_t i = 0; i < records.size(); ++i) column[i] = records[i].window_ci[q];
        out.question_ci.push_back(column_stats(column, deviation));
    }
    for (std::size_t i = 0; i < records.size(); ++i) column[i] = records[i].total_score;
    out.total_score = column_stats(column, deviation);
    for (std::size_t i = 0; i < records.size(); ++i) column[i] = records[i].total_ci;
    out.total_ci = column_stats(column, deviation);
    return out;
}

double engagement_score_correlation(std::span<const QuizRecord> records, int score_threshold, double ci_threshold) {
    std::size_t qualifying = 0;
    std::size_t engaged = 0;
    for (const auto& r : records) {
        if (r.total_score < score_threshold) continue;
        ++qualifying;
        if (r.total_ci >= ci_threshold) ++engaged;
    }
    if (qualifying == 0) throw NoQualifyingStudents("no student scored >= " + std::to_string(score_threshold));
    return static_cast<double>(engaged) / static_cast<double>(qualifying);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError(row, "bad " + what + " `" + cell + "`");
    }
}

}  // namespace

std::vector<QuizRecord> read_quiz_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open quiz file: " + path);
    std::string line;
    std::size_t row = 0;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    ++row;
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "student_id" || header.size() < 3 || (header.size() - 1) % 2 != 0) {
        throw ParseError(row, "header must be student_id,q1_score,q1_ci,...");
    }
    const std::size_t questions = (header.size() - 1) / 2;
    for (std::size_t q = 0; q < questions; ++q) {
        const std::string prefix = "q" + std::to_string(q + 1);
        if (header[1 + 2 * q] != prefix + "_score" || header[2 + 2 * q] != prefix + "_ci") {
            throw ParseError(row, "expected columns " + prefix + "_score," + prefix + "_ci");
        }
    }

    std::vector<QuizRecord> out;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw ParseError(row, "expected " + std::to_string(header.size()) + " columns");
        std::vector<int> scores;
        std::vector<double> cis;
        for (std::size_t q = 0; q < questions; ++q) {
            const double s = parse_number(cells[1 + 2 * q], row, "score");
            if (s != 0.0 && s != 1.0) throw ParseError(row, "score must be 0 or 1");
            scores.push_back(static_cast<int>(s));
            const double c = parse_number(cells[2 + 2 * q], row, "ci");
            if (c < 0.0 || c > 100.0) throw ParseError(row, "ci outside [0,100]");
            cis.push_back(c);
        }
        out.push_back(QuizRecord::make(cells[0], std::move(scores), std::move(cis)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

SessionReport build_session_report(std::vector<ConcentrationSample> samples, std::vector<SessionWindow> windows,
                                   const ReportOptions& options, std::vector<std::optional<double>> emotion_ci) {
    if (samples.empty()) throw EmptySession("session has no samples");
    if (!emotion_ci.empty() && emotion_ci.size() != samples.size()) {
        throw std::invalid_argument("emotion_ci must match the sample count");
    }
    SessionReport r;
    r.alerts = update_alerts(samples, options.debounce);

    std::map<EngagementCategory, std::size_t> counts;
    for (auto c : kCategories) counts[c] = 0;
    for (const auto& s : samples) ++counts[s.category];
    for (const auto& [c, n] : counts) r.occupancy[c] = static_cast<double>(n) / static_cast<double>(samples.size());

    for (const auto& w : windows) {
        try {
            r.window_aggregates[w.label] = window_mean_ci(samples, w);
        } catch (const EmptyWindow&) {
            r.window_aggregates[w.label] = std::nullopt;
        }
    }

    if (options.smoothing_window > 1) {
        const auto k = static_cast<std::size_t>(options.smoothing_window);
        double running = 0.0;
        r.ci_smoothed.reserve(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            running += samples[i].ci;
            if (i >= k) running -= samples[i - k].ci;
            r.ci_smoothed.push_back(running / static_cast<double>(std::min(i + 1, k)));
        }
    }

    r.emotion_ci = emotion_ci.empty() ? std::vector<std::optional<double>>(samples.size()) : std::move(emotion_ci);
    r.samples = std::move(samples);
    r.windows = std::move(windows);
    r.meta = options.meta;
    return r;
}

nlohmann::json report_to_json(const SessionReport& report) {
    using nlohmann::json;
    json samples = json::array();
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        json j;
        j["frame"] = s.frame_index;
        j["timestamp_ms"] = s.timestamp_ms;
        j["attention"] = to_string(s.attention.state);
        j["a"] = s.attention.percent;
        j["emotion"] = s.dominant ? json(std::string(to_string(s.dominant->label))) : json(nullptr);
        j["dep"] = s.dominant ? json(s.dominant->dep) : json(nullptr);
        j["ci"] = s.ci;
        j["category"] = std::string(to_string(s.category));
        j["degraded"] = s.degraded;
        j["emotion_ci"] = report.emotion_ci[i] ? json(*report.emotion_ci[i]) : json(nullptr);
        if (!report.ci_smoothed.empty()) j["ci_smoothed"] = report.ci_smoothed[i];
        samples.push_back(std::move(j));
    }
    json alerts = json::array();
    for (const auto& a : report.alerts) {
        alerts.push_back({{"start_frame", a.start_frame}, {"end_frame", a.end_frame}, {"kind", "NotEngagedRun"}});
    }
    json windows = json::array();
    for (const auto& w : report.windows) {
        const auto& agg = report.window_aggregates.at(w.label);
        windows.push_back({{"label", w.label},
                           {"start_frame", w.start_frame},
                           {"end_frame", w.end_frame},
                           {"mean_ci", agg ? json(*agg) : json(nullptr)}});
    }
    json occupancy = json::object();
    for (const auto& [c, f] : report.occupancy) occupancy[std::string(to_string(c))] = f;

    return {{"samples", samples}, {"alerts", alerts}, {"windows", windows}, {"occupancy", occupancy},
            {"meta", report.meta}};
}

void write_report(const SessionReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw IoError("failed writing report: " + path);
}

// ---------------------------------------------------------------------------
// Plots

std::optional<PlotMode> parse_plot_mode(std::string_view name) {
    if (name == "attention_only") return PlotMode::AttentionOnly;
    if (name == "emotion_only") return PlotMode::EmotionOnly;
    if (name == "combined") return PlotMode::Combined;
    return std::nullopt;
}

std::string_view to_string(PlotMode mode) {
    switch (mode) {
        case PlotMode::AttentionOnly: return "attention_only";
        case PlotMode::EmotionOnly: return "emotion_only";
        case PlotMode::Combined: return "combined";
    }
    return "combined";
}

std::vector<std::optional<double>> timeline_series(const SessionReport& report, PlotMode mode) {
    std::vector<std::optional<double>> out;
    out.reserve(report.samples.size());
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        switch (mode) {
            case PlotMode::AttentionOnly: out.emplace_back(static_cast<double>(s.attention.percent)); break;
            case PlotMode::EmotionOnly: {
                auto v = report.emotion_ci[i];
                if (!v && s.dominant) v = s.ci;
                out.push_back(v);
                break;
            }
            case PlotMode::Combined: out.emplace_back(s.ci); break;
        }
    }
    return out;
}

namespace {

std::string title_for(PlotMode mode) {
    switch (mode) {
        case PlotMode::AttentionOnly: return "Concentration from eye/head movement";
        case PlotMode::EmotionOnly: return "Concentration from facial emotion";
        case PlotMode::Combined: return "Concentration index";
    }
    return "Concentration index";
}

// Consecutive defined points; a missing value breaks the line. Attention is a step signal.
std::vector<std::vector<std::pair<double, double>>> segments(const SessionReport& report,
                                                             const std::vector<std::optional<double>>& series,
                                                             bool step) {
    std::vector<std::vector<std::pair<double, double>>> out;
    std::vector<std::pair<double, double>> cur;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i]) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
            continue;
        }
        const double x = static_cast<double>(report.samples[i].frame_index);
        if (step && !cur.empty() && cur.back().second != *series[i]) cur.emplace_back(x, cur.back().second);
        cur.emplace_back(x, *series[i]);
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

void render_timeline_plot(const SessionReport& report, const std::string& output_path, PlotMode mode) {
    if (report.samples.empty()) throw EmptySession("nothing to plot");
    const auto series = timeline_series(report, mode);

    LinePlot plot;
    plot.title = title_for(mode);
    plot.x_label = "frame";
    plot.y_label = "CI %";
    plot.x_min = static_cast<double>(report.samples.front().frame_index);
    plot.x_max = static_cast<double>(report.samples.back().frame_index);
    plot.y_min = 0.0;
    plot.y_max = 100.0;
    plot.y_ticks = {0.0, 50.0, 100.0};
    plot.lines.push_back({std::string{}, 0x1f77b4, segments(report, series, mode == PlotMode::AttentionOnly)});
    write_line_plot(plot, output_path);

    const std::string sidecar = output_path + ".csv";
    std::ofstream csv(sidecar);
    if (!csv) throw IoError("cannot write plot sidecar: " + sidecar);
    csv << "frame,value\n";
    csv << std::setprecision(10);
    for (std::size_t i = 0; i < series.size(); ++i) {
        csv << report.samples[i].frame_index << ',';
        if (series[i]) csv << *series[i];
        csv << '\n';
    }
    if (!csv) throw IoError("failed writing plot sidecar: " + sidecar);
}

}  // namespace engage
