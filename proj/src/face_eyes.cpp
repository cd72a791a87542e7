#include "engage/face_eyes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <opencv2/imgproc.hpp>

#include "engage/errors.hpp"

namespace engage {

void Frame::validate() const {
    if (pixels.empty() || pixels.cols < 1 || pixels.rows < 1) {
        throw std::invalid_argument("frame " + std::to_string(index) + " has no pixels");
    }
    if (index < 0 || timestamp_ms < 0) {
        throw std::invalid_argument("frame index and timestamp must be non-negative");
    }
    const int depth = pixels.depth();
    const int ch = pixels.channels();
    const bool ok8 = depth == CV_8U && (ch == 1 || ch == 3 || ch == 4);
    const bool ok32 = depth == CV_32F && ch == 1;
    if (!ok8 && !ok32) {
        throw std::invalid_argument("unsupported frame pixel format");
    }
}

bool Box::inside(const Box& outer) const {
    return x >= outer.x && y >= outer.y && x + w <= outer.x + outer.w && y + h <= outer.y + outer.h;
}

double iou(const Box& a, const Box& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    const long long inter = static_cast<long long>(std::max(0, x1 - x0)) * std::max(0, y1 - y0);
    const long long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

Box clip(const Box& box, const Box& bounds) {
    const int x0 = std::max(box.x, bounds.x);
    const int y0 = std::max(box.y, bounds.y);
    const int x1 = std::min(box.x + box.w, bounds.x + bounds.w);
    const int y1 = std::min(box.y + box.h, bounds.y + bounds.h);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

std::vector<std::string> tag_tokens(const std::string& tag) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : tag) {
        if (ch == ';' || ch == '|' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

namespace {

bool has_token(const std::string& tag, const std::string& token) {
    const auto tokens = tag_tokens(tag);
    return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

Box frame_bounds(const Frame& frame) { return {0, 0, frame.width(), frame.height()}; }

}  // namespace

cv::Mat to_gray8(const cv::Mat& pixels) {
    cv::Mat gray;
    if (pixels.depth() == CV_32F) {
        pixels.convertTo(gray, CV_8U, 255.0);
        return gray;
    }
    switch (pixels.channels()) {
        case 1: return pixels;
        case 3: cv::cvtColor(pixels, gray, cv::COLOR_BGR2GRAY); return gray;
        case 4: cv::cvtColor(pixels, gray, cv::COLOR_BGRA2GRAY); return gray;
        default: throw std::invalid_argument("unsupported channel count");
    }
}

// ---------------------------------------------------------------------------
// Detection

std::optional<FaceRegion> detect_largest_face(const Frame& frame, const FaceDetectorBackend& detector) {
    frame.validate();
    const cv::Mat gray = to_gray8(frame.pixels);
    const Box bounds = frame_bounds(frame);

    std::optional<FaceRegion> best;
    for (const Box& candidate : detector.detect(gray, frame.tag)) {
        const Box b = clip(candidate, bounds);
        if (b.empty()) continue;
        // Largest area wins; equal areas resolve to the top-most, then left-most box.
        const bool better = !best || b.area() > best->area() ||
                            (b.area() == best->area() && std::tie(b.y, b.x) < std::tie(best->y, best->x));
        if (better) best = FaceRegion{b};
    }
    return best;
}

std::optional<EyeRegion> locate_eye_region(const Frame& frame, const FaceRegion& face,
                                           const EyeDetectorBackend& detector) {
    frame.validate();
    if (face.empty() || !face.inside(frame_bounds(frame))) {
        throw std::invalid_argument("face region outside frame");
    }
    const int top_h = static_cast<int>(std::lround(face.h * kEyeSearchFraction));
    if (top_h < 1) return std::nullopt;

    const cv::Mat gray = to_gray8(frame.pixels);
    const cv::Mat face_top = gray(cv::Rect(face.x, face.y, face.w, top_h));
    const auto local = detector.locate(face_top, face.h, frame.tag);
    if (!local) return std::nullopt;

    const Box shifted{local->x + face.x, local->y + face.y, local->w, local->h};
    const Box eyes = clip(shifted, face);
    if (eyes.empty()) return std::nullopt;
    return EyeRegion{eyes};
}

GrayPatch preprocess_patch(const Frame& frame, const Box& region, int side) {
    frame.validate();
    const Box r = clip(region, frame_bounds(frame));
    if (r.empty()) throw std::invalid_argument("empty preprocessing region");

    const cv::Mat roi = frame.pixels(r.rect());
    cv::Mat gray;
    if (roi.depth() == CV_32F) {
        gray = roi.clone();
    } else {
        to_gray8(roi).convertTo(gray, CV_32F, 1.0 / 255.0);
    }

    GrayPatch out;
    out.tag = frame.tag;
    if (gray.rows == side && gray.cols == side) {
        out.pixels = gray;
    } else {
        cv::resize(gray, out.pixels, cv::Size(side, side), 0, 0, cv::INTER_LINEAR);
    }
    cv::min(out.pixels, 1.0, out.pixels);
    cv::max(out.pixels, 0.0, out.pixels);
    return out;
}

// ---------------------------------------------------------------------------
// Cascade backends

CascadeFaceDetector::CascadeFaceDetector(const std::string& cascade_path, Params params)
    : path_(cascade_path), params_(params) {
    bool loaded = false;
    try {
        loaded = cascade_.load(cascade_path);
    } catch (const cv::Exception&) {
        loaded = false;
    }
    if (!loaded || cascade_.empty()) {
        throw DetectorUnavailable("cannot load face cascade: " + cascade_path);
    }
}

std::vector<Box> CascadeFaceDetector::detect(const cv::Mat& gray, const std::string&) const {
    cv::Mat eq;
    cv::equalizeHist(gray, eq);
    std::vector<cv::Rect> hits;
    {
        std::lock_guard lock(mutex_);
        cascade_.detectMultiScale(eq, hits, params_.scale_factor, params_.min_neighbors, 0,
                                  cv::Size(params_.min_size, params_.min_size));
    }
    std::vector<Box> out;
    out.reserve(hits.size());
    for (const auto& r : hits) out.push_back(Box::from(r));
    return out;
}

CascadeEyeDetector::CascadeEyeDetector(const std::string& cascade_path) : path_(cascade_path) {
    bool loaded = false;
    try {
        loaded = cascade_.load(cascade_path);
    } catch (const cv::Exception&) {
        loaded = false;
    }
    if (!loaded || cascade_.empty()) {
        throw DetectorUnavailable("cannot load eye cascade: " + cascade_path);
    }
}

std::optional<Box> CascadeEyeDetector::locate(const cv::Mat& face_top, int face_height, const std::string&) const {
    if (face_top.cols < 12 || face_height < 12) return std::nullopt;
    const int min_eye = std::max(4, face_top.cols / 10);
    std::vector<cv::Rect> hits;
    {
        std::lock_guard lock(mutex_);
        cascade_.detectMultiScale(face_top, hits, 1.1, 3, 0, cv::Size(min_eye, min_eye));
    }
    if (hits.empty()) return std::nullopt;
    std::sort(hits.begin(), hits.end(), [](const cv::Rect& a, const cv::Rect& b) {
        return std::tie(b.width, a.y, a.x) < std::tie(a.width, b.y, b.x);
    });
    cv::Rect joint = hits[0];
    if (hits.size() > 1) joint |= hits[1];
    return Box::from(joint);
}

// ---------------------------------------------------------------------------
// Projection eye locator

namespace {

std::vector<double> box_smooth(const std::vector<double>& v, int radius) {
    std::vector<double> out(v.size());
    const int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int k = std::max(0, i - radius); k <= std::min(n - 1, i + radius); ++k) {
            sum += v[k];
            ++count;
        }
        out[i] = sum / count;
    }
    return out;
}

double percentile(std::vector<float> values, double q) {
    if (values.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(q * static_cast<double>(values.size() - 1));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

}  // namespace

std::optional<Box> ProjectionEyeLocator::locate(const cv::Mat& face_top, int face_height, const std::string&) const {
    const auto& p = params_;
    if (face_top.cols < p.min_face_side || face_height < p.min_face_side) return std::nullopt;

    // Work at a fixed width so the smoothing radii are scale free.
    constexpr int kWidth = 60;
    const double s = static_cast<double>(kWidth) / face_top.cols;
    const int rows = std::max(1, static_cast<int>(std::lround(face_top.rows * s)));
    cv::Mat img;
    cv::resize(face_top, img, cv::Size(kWidth, rows), 0, 0, cv::INTER_AREA);
    img.convertTo(img, CV_32F, 1.0 / 255.0);

    const int r0 = std::clamp(static_cast<int>(p.band_top * face_height * s), 0, rows - 1);
    const int r1 = std::clamp(static_cast<int>(p.band_bottom * face_height * s), r0, rows - 1);
    const int c0 = static_cast<int>(0.15 * kWidth);
    const int c1 = static_cast<int>(0.85 * kWidth);

    std::vector<double> row_profile(rows, 0.0);
    for (int y = 0; y < rows; ++y) {
        const float* line = img.ptr<float>(y);
        double sum = 0.0;
        for (int x = c0; x < c1; ++x) sum += line[x];
        row_profile[y] = sum / (c1 - c0);
    }
    row_profile = box_smooth(row_profile, 1);
    int valley = r0;
    for (int y = r0; y <= r1; ++y) {
        if (row_profile[y] < row_profile[valley]) valley = y;
    }

    std::vector<float> band;
    for (int y = r0; y <= r1; ++y) {
        const float* line = img.ptr<float>(y);
        band.insert(band.end(), line + c0, line + c1);
    }
    const double spread = percentile(band, 0.95) - percentile(band, 0.05);
    if (spread <= 1e-3) return std::nullopt;

    const int half = std::max(1, static_cast<int>(std::lround(0.05 * face_height * s)));
    const int y0 = std::max(0, valley - half);
    const int y1 = std::min(rows - 1, valley + half);
    std::vector<double> col_profile(kWidth, 0.0);
    for (int y = y0; y <= y1; ++y) {
        const float* line = img.ptr<float>(y);
        for (int x = 0; x < kWidth; ++x) col_profile[x] += line[x];
    }
    for (auto& v : col_profile) v /= (y1 - y0 + 1);
    col_profile = box_smooth(col_profile, 2);

    auto range_min = [&](double a, double b) {
        const int lo = static_cast<int>(a * kWidth);
        const int hi = static_cast<int>(b * kWidth);
        return *std::min_element(col_profile.begin() + lo, col_profile.begin() + hi);
    };
    auto range_max = [&](double a, double b) {
        const int lo = static_cast<int>(a * kWidth);
        const int hi = static_cast<int>(b * kWidth);
        return *std::max_element(col_profile.begin() + lo, col_profile.begin() + hi);
    };
    const double left = range_min(0.12, 0.47);
    const double right = range_min(0.53, 0.88);
    const double bridge = range_max(0.40, 0.60);
    const double contrast = (bridge - std::max(left, right)) / spread;
    if (contrast < p.min_bridge_contrast) return std::nullopt;

    const int strip_h = std::max(1, static_cast<int>(std::lround(p.strip_height * face_height)));
    const int x = static_cast<int>(std::lround(p.strip_left * face_top.cols));
    const int w = std::max(1, static_cast<int>(std::lround((p.strip_right - p.strip_left) * face_top.cols)));
    const int centre = static_cast<int>(std::lround((valley + 0.5) / s));
    const int y = std::clamp(centre - strip_h / 2, 0, std::max(0, face_top.rows - strip_h));
    return Box{x, y, w, std::min(strip_h, face_top.rows - y)};
}

// ---------------------------------------------------------------------------
// Stubs

std::vector<Box> StubFaceDetector::detect(const cv::Mat& gray, const std::string& tag) const {
    if (has_token(tag, "noface")) return {};
    const int w = std::max(1, gray.cols * 8 / 10);
    const int h = std::max(1, gray.rows * 8 / 10);
    return {Box{(gray.cols - w) / 2, (gray.rows - h) / 2, w, h}};
}

std::optional<Box> StubEyeDetector::locate(const cv::Mat& face_top, int face_height, const std::string& tag) const {
    if (has_token(tag, "noeyes")) return std::nullopt;
    const int y = face_height / 4;
    const int h = std::max(1, face_height / 5);
    if (y + h > face_top.rows || face_top.cols < 1) return std::nullopt;
    return Box{0, y, face_top.cols, h};
}

// ---------------------------------------------------------------------------

std::vector<Annotation> read_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotation file: " + path);
    std::vector<Annotation> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        Annotation a;
        if (!(ss >> a.name)) continue;
        if (!(ss >> a.box.x >> a.box.y >> a.box.w >> a.box.h >> a.label)) {
            throw ParseError(row, "expected `name x y w h label`");
        }
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace engage
