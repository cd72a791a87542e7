#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/objdetect.hpp>

namespace engage {

/// One acquired image. `pixels` is 8-bit gray/BGR, or 32-bit float gray already in [0,1].
/// `tag` is an opaque side channel that only the stub backends read.
struct Frame {
    std::int64_t index = 0;
    std::int64_t timestamp_ms = 0;
    cv::Mat pixels;
    std::string tag;

    int width() const { return pixels.cols; }
    int height() const { return pixels.rows; }
    /// Throws std::invalid_argument on empty pixels, negative index/time or an unsupported depth.
    void validate() const;
};

struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    bool empty() const { return w <= 0 || h <= 0; }
    bool inside(const Box& outer) const;
    cv::Rect rect() const { return {x, y, w, h}; }
    static Box from(const cv::Rect& r) { return {r.x, r.y, r.width, r.height}; }

    friend bool operator==(const Box&, const Box&) = default;
};

double iou(const Box& a, const Box& b);

/// Clips `box` to `bounds`; the result may be empty.
Box clip(const Box& box, const Box& bounds);

struct FaceRegion : Box {};
struct EyeRegion : Box {};

/// Square single-channel float patch with values in [0,1].
struct GrayPatch {
    cv::Mat pixels;  // CV_32FC1, side x side
    std::string tag;

    int side() const { return pixels.rows; }
};

class FaceDetectorBackend {
public:
    virtual ~FaceDetectorBackend() = default;
    /// Candidate faces in `gray` (CV_8UC1) coordinates, in any order.
    virtual std::vector<Box> detect(const cv::Mat& gray, const std::string& tag) const = 0;
    virtual std::string id() const = 0;
};

class EyeDetectorBackend {
public:
    virtual ~EyeDetectorBackend() = default;
    /// Searches `face_top` (the upper part of the face, CV_8UC1). The result is
    /// in `face_top` coordinates. `face_height` is the full face box height.
    virtual std::optional<Box> locate(const cv::Mat& face_top, int face_height,
                                      const std::string& tag) const = 0;
    virtual std::string id() const = 0;
};

/// cv::CascadeClassifier over a frontal-face parameter file (Haar or LBP).
class CascadeFaceDetector final : public FaceDetectorBackend {
public:
    struct Params {
        double scale_factor = 1.1;
        int min_neighbors = 3;
        int min_size = 30;
    };

    explicit CascadeFaceDetector(const std::string& cascade_path) : CascadeFaceDetector(cascade_path, Params{}) {}
    CascadeFaceDetector(const std::string& cascade_path, Params params);

    std::vector<Box> detect(const cv::Mat& gray, const std::string& tag) const override;
    std::string id() const override { return "cascade:" + path_; }

private:
    std::string path_;
    Params params_;
    // detectMultiScale mutates internal buffers, so calls are serialized.
    mutable std::mutex mutex_;
    mutable cv::CascadeClassifier cascade_;
};

/// Eye cascade; the joint strip is the union of the two largest eye hits.
class CascadeEyeDetector final : public EyeDetectorBackend {
public:
    explicit CascadeEyeDetector(const std::string& cascade_path);

    std::optional<Box> locate(const cv::Mat& face_top, int face_height, const std::string& tag) const override;
    std::string id() const override { return "cascade:" + path_; }

private:
    std::string path_;
    mutable std::mutex mutex_;
    mutable cv::CascadeClassifier cascade_;
};

/// Integral-projection eye locator. Finds the darkest horizontal band in the
/// upper face and accepts it only if the band splits into two dark lobes with
/// a brighter bridge between them. Needs no parameter file.
class ProjectionEyeLocator final : public EyeDetectorBackend {
public:
    struct Params {
        int min_face_side = 24;
        double band_top = 0.18;     // searched rows, fraction of face height
        double band_bottom = 0.58;
        double strip_left = 0.12;   // emitted strip, fraction of face width
        double strip_right = 0.88;
        double strip_height = 0.20;  // fraction of face height
        double min_bridge_contrast = 0.35;  // in units of the band's intensity spread
    };

    ProjectionEyeLocator() : ProjectionEyeLocator(Params{}) {}
    explicit ProjectionEyeLocator(Params params) : params_(params) {}

    std::optional<Box> locate(const cv::Mat& face_top, int face_height, const std::string& tag) const override;
    std::string id() const override { return "projection"; }

private:
    Params params_;
};

/// Tag-driven test doubles. `noface` / `noeyes` tokens suppress detection;
/// otherwise the face covers the central 80% of the frame and the eyes the
/// 25%..45% band of the face.
class StubFaceDetector final : public FaceDetectorBackend {
public:
    std::vector<Box> detect(const cv::Mat& gray, const std::string& tag) const override;
    std::string id() const override { return "stub"; }
};

class StubEyeDetector final : public EyeDetectorBackend {
public:
    std::optional<Box> locate(const cv::Mat& face_top, int face_height, const std::string& tag) const override;
    std::string id() const override { return "stub"; }
};

/// Fraction of the face box height searched for eyes.
inline constexpr double kEyeSearchFraction = 0.6;

/// 8-bit grayscale view of any supported frame (BGR via luma weights, float scaled by 255).
cv::Mat to_gray8(const cv::Mat& pixels);

std::optional<FaceRegion> detect_largest_face(const Frame& frame, const FaceDetectorBackend& detector);

std::optional<EyeRegion> locate_eye_region(const Frame& frame, const FaceRegion& face,
                                           const EyeDetectorBackend& detector);

GrayPatch preprocess_patch(const Frame& frame, const Box& region, int side);

inline GrayPatch preprocess_attention_patch(const Frame& frame, const EyeRegion& eyes) {
    return preprocess_patch(frame, eyes, 64);
}

inline GrayPatch preprocess_emotion_patch(const Frame& frame, const FaceRegion& face) {
    return preprocess_patch(frame, face, 48);
}

/// `name x y w h label` lines; `#` starts a comment. An image may have several lines.
struct Annotation {
    std::string name;
    Box box;
    std::string label;
};

std::vector<Annotation> read_annotations(const std::string& path);

/// Splits a stub tag into tokens on ';' '|' and whitespace. Commas stay inside tokens.
std::vector<std::string> tag_tokens(const std::string& tag);

}  // namespace engage
