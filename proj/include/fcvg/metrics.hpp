#pragma once

#include <optional>

#include "fcvg/tensor.hpp"
#include "json.hpp"

namespace fcvg {

/// Desk-scale stability and fidelity measures. Frames are real-valued with
/// peak 1.0 (PSNR uses that peak; an exact match reports +infinity).
struct MetricsReport {
    double endpoint_mse_start = 0.0;
    double endpoint_mse_end = 0.0;
    double psnr_start = 0.0;
    double psnr_end = 0.0;
    /// Mean over interior frames of ||x_{i+1} - 2x_i + x_{i-1}||² / (C·H·W); absent for N < 3.
    std::optional<double> smoothness;
    /// Mean distance (px) of each frame's intensity centroid from the point a
    /// constant-velocity path between the key-frame centroids would occupy.
    double trajectory_deviation = 0.0;
    /// Mean squared error against a ground-truth clip, when one is supplied.
    std::optional<double> ground_truth_mse;
};

double mse(std::span<const double> a, std::span<const double> b);
double psnr_from_mse(double mse);

struct Centroid {
    double x;
    double y;
};
/// Centroid of max(0, channel mean); the canvas centre for an all-dark frame.
Centroid intensity_centroid(std::span<const double> frame, int channels, int height, int width);

MetricsReport compute_metrics(const Video& video, const Image& start, const Image& end,
                              const Video* ground_truth = nullptr);

inline constexpr const char* kMetricsFormat = "fcvg-metrics/1";

/// JSON with format tag; infinite PSNR is written as the string "inf".
nlohmann::json to_json(const MetricsReport& report);

} // namespace fcvg
