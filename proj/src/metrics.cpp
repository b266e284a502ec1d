#include "fcvg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcvg/error.hpp"

namespace fcvg {

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw StructuralError("mse: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double m) {
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

Centroid intensity_centroid(std::span<const double> frame, int channels, int height, int width) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    double mass = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double v = 0.0;
            for (int c = 0; c < channels; ++c) v += frame[c * plane + static_cast<std::size_t>(y) * width + x];
            v = std::max(0.0, v / channels);
            mass += v;
            sx += v * (x + 0.5);
            sy += v * (y + 0.5);
        }
    }
    if (mass <= 0.0) return {width / 2.0, height / 2.0};
    return {sx / mass, sy / mass};
}

MetricsReport compute_metrics(const Video& video, const Image& start, const Image& end, const Video* ground_truth) {
    if (!video.frame_shape_matches(start) || !video.frame_shape_matches(end)) {
        throw StructuralError("metrics: key frames do not match the video frame shape");
    }
    const int N = video.frames();
    MetricsReport r;
    r.endpoint_mse_start = mse(video.frame(0), start.values());
    r.endpoint_mse_end = mse(video.frame(N - 1), end.values());
    r.psnr_start = psnr_from_mse(r.endpoint_mse_start);
    r.psnr_end = psnr_from_mse(r.endpoint_mse_end);

    if (N >= 3) {
        const double fs = static_cast<double>(video.frame_size());
        double acc = 0.0;
        for (int i = 1; i + 1 < N; ++i) {
            auto prev = video.frame(i - 1), cur = video.frame(i), next = video.frame(i + 1);
            double s = 0.0;
            for (std::size_t k = 0; k < cur.size(); ++k) {
                const double d = next[k] - 2.0 * cur[k] + prev[k];
                s += d * d;
            }
            acc += s / fs;
        }
        r.smoothness = acc / (N - 2);
    }

    const int C = video.channels(), H = video.height(), W = video.width();
    const Centroid a = intensity_centroid(start.values(), C, H, W);
    const Centroid b = intensity_centroid(end.values(), C, H, W);
    double dev = 0.0;
    for (int i = 0; i < N; ++i) {
        const double u = N > 1 ? static_cast<double>(i) / (N - 1) : 0.0;
        const Centroid c = intensity_centroid(video.frame(i), C, H, W);
        dev += std::hypot(c.x - (a.x + u * (b.x - a.x)), c.y - (a.y + u * (b.y - a.y)));
    }
    r.trajectory_deviation = dev / N;

    if (ground_truth) {
        require_same_shape(video, *ground_truth, "metrics ground truth");
        r.ground_truth_mse = mse(video.values(), ground_truth->values());
    }
    return r;
}

nlohmann::json to_json(const MetricsReport& r) {
    auto db = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return "inf";
        return v;
    };
    nlohmann::json j = {{"format", kMetricsFormat},
                        {"endpoint_mse_start", r.endpoint_mse_start},
                        {"endpoint_mse_end", r.endpoint_mse_end},
                        {"psnr_start", db(r.psnr_start)},
                        {"psnr_end", db(r.psnr_end)},
                        {"smoothness", r.smoothness ? nlohmann::json(*r.smoothness) : nlohmann::json()},
                        {"trajectory_deviation", r.trajectory_deviation}};
    if (r.ground_truth_mse) j["ground_truth_mse"] = *r.ground_truth_mse;
    return j;
}

} // namespace fcvg
