#include "engage/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "engage/errors.hpp"

namespace engage {

namespace {

constexpr int kLeft = 60;
constexpr int kRight = 20;
constexpr int kTop = 30;
constexpr int kBottom = 45;

struct Mapper {
    const LinePlot& p;

    double px(double x) const {
        const double span = p.x_max > p.x_min ? p.x_max - p.x_min : 1.0;
        return kLeft + (x - p.x_min) / span * (p.width - kLeft - kRight);
    }
    double py(double y) const {
        const double span = p.y_max > p.y_min ? p.y_max - p.y_min : 1.0;
        return kTop + (p.y_max - y) / span * (p.height - kTop - kBottom);
    }
};

std::string tick_text(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string hex_color(unsigned rgb) {
    std::ostringstream s;
    s << '#' << std::hex << std::setw(6) << std::setfill('0') << (rgb & 0xffffff);
    return s.str();
}

cv::Scalar bgr(unsigned rgb) { return cv::Scalar(rgb & 0xff, (rgb >> 8) & 0xff, (rgb >> 16) & 0xff); }

void write_svg(const LinePlot& p, const std::string& path) {
    const Mapper m{p};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write plot: " + path);
    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(p.title)
        << "</text>\n";
    for (double t : p.y_ticks) {
        out << "<line x1=\"" << kLeft << "\" y1=\"" << m.py(t) << "\" x2=\"" << p.width - kRight << "\" y2=\""
            << m.py(t) << "\" stroke=\"#cccccc\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << m.py(t) + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << tick_text(t) << "</text>\n";
    }
    out << "<text x=\"" << (kLeft + p.width - kRight) / 2 << "\" y=\"" << p.height - 10
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << escape_xml(p.x_label)
        << "</text>\n";
    double legend_y = 20;
    for (const auto& line : p.lines) {
        for (const auto& seg : line.segments) {
            out << "<polyline fill=\"none\" stroke=\"" << hex_color(line.rgb) << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : seg) out << m.px(x) << ',' << m.py(y) << ' ';
            out << "\"/>\n";
        }
        if (!line.label.empty()) {
            out << "<text x=\"" << p.width - kRight << "\" y=\"" << legend_y << "\" fill=\"" << hex_color(line.rgb)
                << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << escape_xml(line.label)
                << "</text>\n";
            legend_y += 14;
        }
    }
    out << "</svg>\n";
    if (!out) throw IoError("failed writing plot: " + path);
}

void write_raster(const LinePlot& p, const std::string& path) {
    const Mapper m{p};
    const cv::Scalar black(0, 0, 0);
    cv::Mat img(p.height, p.width, CV_8UC3, cv::Scalar(255, 255, 255));
    for (double t : p.y_ticks) {
        const int y = static_cast<int>(std::lround(m.py(t)));
        cv::line(img, {kLeft, y}, {p.width - kRight, y}, cv::Scalar(204, 204, 204), 1);
        cv::putText(img, tick_text(t), {6, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
    }
    cv::putText(img, p.title, {kLeft, 20}, cv::FONT_HERSHEY_SIMPLEX, 0.5, black, 1, cv::LINE_AA);
    cv::putText(img, p.x_label, {(kLeft + p.width - kRight) / 2 - 20, p.height - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                black, 1, cv::LINE_AA);
    int legend_y = 20;
    for (const auto& line : p.lines) {
        for (const auto& seg : line.segments) {
            std::vector<cv::Point> pts;
            pts.reserve(seg.size());
            for (const auto& [x, y] : seg) {
                pts.emplace_back(static_cast<int>(std::lround(m.px(x))), static_cast<int>(std::lround(m.py(y))));
            }
            if (pts.size() == 1) {
                cv::circle(img, pts[0], 1, bgr(line.rgb), -1);
            } else {
                cv::polylines(img, pts, false, bgr(line.rgb), 1, cv::LINE_AA);
            }
        }
        if (!line.label.empty()) {
            int baseline = 0;
            const auto size = cv::getTextSize(line.label, cv::FONT_HERSHEY_SIMPLEX, 0.4, 1, &baseline);
            cv::putText(img, line.label, {p.width - kRight - size.width, legend_y}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                        bgr(line.rgb), 1, cv::LINE_AA);
            legend_y += 14;
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path, img);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write plot " + path + ": " + e.what());
    }
    if (!ok) throw IoError("cannot write plot: " + path);
}

}  // namespace

void write_line_plot(const LinePlot& plot, const std::string& path) {
    if (std::filesystem::path(path).extension() == ".svg") {
        write_svg(plot, path);
    } else {
        write_raster(plot, path);
    }
}

}  // namespace engage
