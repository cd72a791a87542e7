#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace testsupport {

inline std::string fixture(const std::string& rel) { return std::string(ENGAGE_FIXTURE_DIR) + "/" + rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("engage_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// Structural JSON equality with a tolerance on numbers.
inline bool json_close(const nlohmann::json& a, const nlohmann::json& b, double tol = 1e-9) {
    if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>()) <= tol;
    if (a.type() != b.type()) return false;
    if (a.is_object()) {
        if (a.size() != b.size()) return false;
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key()) || !json_close(it.value(), b.at(it.key()), tol)) return false;
        }
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!json_close(a[i], b[i], tol)) return false;
        }
        return true;
    }
    return a == b;
}

/// Seven visually distinct 48x48 classes: one geometric motif per class,
/// with jittered position, size, intensity and noise.
inline cv::Mat emotion_like_image(int cls, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> jitter(-4, 4);
    std::uniform_int_distribution<int> bg(20, 60);
    std::uniform_int_distribution<int> fg(180, 240);
    std::normal_distribution<double> noise(0.0, 8.0);
    cv::Mat img(48, 48, CV_8UC1, cv::Scalar(bg(rng)));
    const cv::Scalar ink(fg(rng));
    const cv::Point c(24 + jitter(rng), 24 + jitter(rng));
    const int r = 12 + jitter(rng) / 2;
    switch (cls) {
        case 0: cv::circle(img, c, r, ink, -1); break;
        case 1: cv::rectangle(img, c - cv::Point(r, r), c + cv::Point(r, r), ink, -1); break;
        case 2: cv::line(img, c - cv::Point(r, 0), c + cv::Point(r, 0), ink, 5); break;
        case 3: cv::line(img, c - cv::Point(0, r), c + cv::Point(0, r), ink, 5); break;
        case 4: cv::line(img, c - cv::Point(r, r), c + cv::Point(r, r), ink, 5); break;
        case 5: cv::circle(img, c, r, ink, 3); break;
        default: {
            std::vector<cv::Point> tri = {c + cv::Point(0, -r), c + cv::Point(-r, r), c + cv::Point(r, r)};
            cv::fillConvexPoly(img, tri, ink);
        }
    }
    cv::Mat n(img.size(), CV_64F);
    for (int y = 0; y < n.rows; ++y) {
        for (int x = 0; x < n.cols; ++x) n.at<double>(y, x) = noise(rng);
    }
    cv::Mat f;
    img.convertTo(f, CV_64F);
    f += n;
    f.convertTo(img, CV_8U);
    return img;
}

inline const char* const kEmotionFolders[7] = {"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"};

/// `count` images spread round-robin over the seven emotion folders.
inline void write_emotion_dataset(const std::filesystem::path& root, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i) {
        const int cls = i % 7;
        const auto dir = root / kEmotionFolders[cls];
        std::filesystem::create_directories(dir);
        cv::imwrite((dir / ("img_" + std::to_string(i) + ".png")).string(), emotion_like_image(cls, rng));
    }
}

/// Bright "focused" and dark "distracted" 64x64 images with noise.
inline void write_attention_dataset(const std::filesystem::path& root, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 12.0);
    for (int i = 0; i < count; ++i) {
        const bool focused = i % 2 == 0;
        const auto dir = root / (focused ? "focused" : "distracted");
        std::filesystem::create_directories(dir);
        cv::Mat img(64, 64, CV_8UC1);
        const double base = focused ? 170.0 : 80.0;
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                img.at<unsigned char>(y, x) = cv::saturate_cast<unsigned char>(base + noise(rng));
            }
        }
        cv::imwrite((dir / ("eye_" + std::to_string(i) + ".png")).string(), img);
    }
}

}  // namespace testsupport
