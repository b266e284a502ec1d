#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fcvg {

/// Single C×H×W image, row-major per channel.
class Image {
public:
    Image() = default;
    Image(int channels, int height, int width, double fill = 0.0);

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }

    double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const Image& other) const { return c_ == other.c_ && h_ == other.h_ && w_ == other.w_; }
    bool operator==(const Image&) const = default;

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * h_ + y) * w_ + x;
    }

    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

/// N×C×H×W tensor: a latent video, a decoded clip, or a stack of condition rasters.
class Video {
public:
    Video() = default;
    Video(int frames, int channels, int height, int width, double fill = 0.0);

    static Video from_frames(std::span<const Image> frames);

    int frames() const { return n_; }
    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    std::size_t frame_size() const { return static_cast<std::size_t>(c_) * h_ * w_; }

    double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<double> frame(int n) { return std::span(data_).subspan(n * frame_size(), frame_size()); }
    std::span<const double> frame(int n) const {
        return std::span(data_).subspan(n * frame_size(), frame_size());
    }

    Image frame_image(int n) const;
    void set_frame(int n, const Image& img);

    bool same_shape(const Video& other) const {
        return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
    }
    bool frame_shape_matches(const Image& img) const {
        return c_ == img.channels() && h_ == img.height() && w_ == img.width();
    }
    std::string shape_string() const;
    bool all_finite() const;

    bool operator==(const Video&) const = default;

private:
    std::size_t index(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
    }

    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

/// Throws StructuralError naming `what` if shapes differ.
void require_same_shape(const Video& a, const Video& b, const char* what);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

} // namespace fcvg
