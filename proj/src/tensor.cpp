#include "fcvg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "fcvg/error.hpp"

namespace fcvg {

Image::Image(int channels, int height, int width, double fill) : c_(channels), h_(height), w_(width) {
    if (channels <= 0 || height <= 0 || width <= 0) {
        throw StructuralError("image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(c_) * h_ * w_, fill);
}

Video::Video(int frames, int channels, int height, int width, double fill)
    : n_(frames), c_(channels), h_(height), w_(width) {
    if (frames <= 0 || channels <= 0 || height <= 0 || width <= 0) {
        throw StructuralError("video dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill);
}

Video Video::from_frames(std::span<const Image> frames) {
    if (frames.empty()) throw StructuralError("cannot build a video from zero frames");
    const Image& first = frames.front();
    Video v(static_cast<int>(frames.size()), first.channels(), first.height(), first.width());
    for (std::size_t i = 0; i < frames.size(); ++i) v.set_frame(static_cast<int>(i), frames[i]);
    return v;
}

Image Video::frame_image(int n) const {
    Image img(c_, h_, w_);
    auto src = frame(n);
    std::copy(src.begin(), src.end(), img.values().begin());
    return img;
}

void Video::set_frame(int n, const Image& img) {
    if (!frame_shape_matches(img)) {
        throw StructuralError("frame shape does not match video " + shape_string());
    }
    std::copy(img.values().begin(), img.values().end(), frame(n).begin());
}

std::string Video::shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
}

bool Video::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Video& a, const Video& b, const char* what) {
    if (!a.same_shape(b)) {
        throw StructuralError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw StructuralError("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace fcvg
