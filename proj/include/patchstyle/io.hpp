#pragma once

// Image decoding and encoding. This is the only header that depends on
// OpenCV; the rest of the library works on PlanarImage.

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"
#include "patchstyle/segmentation.hpp"

namespace patchstyle {

namespace detail {

inline PlanarImage from_bgr(const cv::Mat& bgr8) {
    PlanarImage img(bgr8.cols, bgr8.rows);
    for (int y = 0; y < bgr8.rows; ++y) {
        const auto* row = bgr8.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr8.cols; ++x) {
            img.at(0, y, x) = row[x][2];
            img.at(1, y, x) = row[x][1];
            img.at(2, y, x) = row[x][0];
        }
    }
    return img;
}

inline cv::Mat to_bgr8(const PlanarImage& img) {
    cv::Mat out(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = out.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                row[x][2 - c] = static_cast<unsigned char>(std::lround(std::clamp(img.at(c, y, x), 0.0, 255.0)));
            }
        }
    }
    return out;
}

template <int C>
cv::Mat to_mat(const Raster<C>& img) {
    cv::Mat out(img.height(), img.width(), CV_MAKETYPE(CV_64F, C));
    for (int y = 0; y < img.height(); ++y) {
        auto* row = out.ptr<double>(y);
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < C; ++c) row[x * C + c] = img.at(c, y, x);
    }
    return out;
}

template <int C>
Raster<C> from_mat(const cv::Mat& m) {
    Raster<C> img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<double>(y);
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < C; ++c) img.at(c, y, x) = row[x * C + c];
    }
    return img;
}

}  // namespace detail

/// Decodes an 8-bit PNG or JPEG into RGB.
[[nodiscard]] inline PlanarImage load_image(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read image " + path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw IoError("cannot decode image " + path.string());
    return detail::from_bgr(m);
}

[[nodiscard]] inline ScalarField load_gray(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read image " + path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw IoError("cannot decode image " + path.string());
    ScalarField f(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) f.at(0, y, x) = m.at<unsigned char>(y, x);
    return f;
}

/// Writes an 8-bit RGB PNG (values rounded and clamped).
inline void save_png(const std::filesystem::path& path, const PlanarImage& img) {
    if (!cv::imwrite(path.string(), detail::to_bgr8(img))) throw IoError("cannot write image " + path.string());
}

inline void save_gray_png(const std::filesystem::path& path, const ScalarField& f, double scale = 1.0) {
    cv::Mat out(f.height(), f.width(), CV_8UC1);
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            out.at<unsigned char>(y, x) =
                static_cast<unsigned char>(std::lround(std::clamp(f.at(0, y, x) * scale, 0.0, 255.0)));
    if (!cv::imwrite(path.string(), out)) throw IoError("cannot write image " + path.string());
}

/// Reads a gray mask file and scales [0, 255] onto [0, max_weight]. When
/// `expected_w`/`expected_h` are given the file must have exactly that size.
[[nodiscard]] inline SegmentationMask load_mask(const std::filesystem::path& path, double max_weight = 10.0,
                                                std::optional<int> expected_w = {},
                                                std::optional<int> expected_h = {}) {
    const ScalarField gray = load_gray(path);
    if ((expected_w && gray.width() != *expected_w) || (expected_h && gray.height() != *expected_h)) {
        throw DimensionError("mask " + path.string() + " is " + std::to_string(gray.width()) + "x" +
                             std::to_string(gray.height()) + ", expected " + std::to_string(expected_w.value_or(0)) +
                             "x" + std::to_string(expected_h.value_or(0)));
    }
    return mask_from_gray(gray, max_weight);
}

/// Resamples to exactly size x size. With `keep_aspect`, the image is scaled
/// to fit and centred on a black square instead of being stretched.
template <int C>
[[nodiscard]] Raster<C> resize_square(const Raster<C>& img, int size, bool keep_aspect = false) {
    if (size < 1) throw ConfigError("resize target must be >= 1");
    if (img.width() == size && img.height() == size) return img;
    const cv::Mat src = detail::to_mat(img);
    auto resample = [&](int w, int h) {
        cv::Mat dst;
        const bool shrink = w < img.width() || h < img.height();
        cv::resize(src, dst, cv::Size(w, h), 0, 0, shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
        return dst;
    };
    if (!keep_aspect) return clamped(detail::from_mat<C>(resample(size, size)));
    const double s = static_cast<double>(size) / std::max(img.width(), img.height());
    const int w = std::max(1, static_cast<int>(std::lround(img.width() * s)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height() * s)));
    cv::Mat canvas = cv::Mat::zeros(size, size, CV_MAKETYPE(CV_64F, C));
    resample(w, h).copyTo(canvas(cv::Rect((size - w) / 2, (size - h) / 2, w, h)));
    return clamped(detail::from_mat<C>(canvas));
}

}  // namespace patchstyle
