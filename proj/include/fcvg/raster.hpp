#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "fcvg/geometry.hpp"
#include "fcvg/tensor.hpp"

namespace fcvg {

using Rgb = std::array<std::uint8_t, 3>;

/// Rasterized condition c_i: H×W×3 bytes, interleaved RGB, row-major.
struct ConditionFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    ConditionFrame() = default;
    ConditionFrame(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    Rgb at(int x, int y) const {
        const auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }
    bool operator==(const ConditionFrame&) const = default;
};

constexpr int kLineWidth = 2;

/// Visits the pixels of a 2-px wide, non-antialiased segment. Endpoints are
/// snapped with floor(); each step along the major axis sets the nearest
/// minor-axis pixel (ties toward +minor) and its +1 neighbour. The pixel set
/// does not depend on endpoint order. Pixels outside `canvas` are skipped.
void for_each_segment_pixel(const LineSegment& seg, Canvas canvas, const std::function<void(int, int)>& visit);

/// One colour per match id: a hue wheel with one slot per id, shuffled by
/// `palette_seed`. All line colours are fully saturated.
std::map<int, Rgb> line_palette(std::span<const int> match_ids, std::uint64_t palette_seed);

/// Reserved pose-edge colours. Every channel is non-zero, so they never
/// collide with fully saturated line colours or the black background.
std::span<const Rgb> pose_palette();

/// Lines in ascending id order, then pose edges whose endpoints are present.
ConditionFrame rasterize(const ConditionGeometry& geometry, std::uint64_t palette_seed);

std::vector<ConditionFrame> rasterize_all(std::span<const ConditionGeometry> geometries, std::uint64_t palette_seed);

/// Stacks frames into an N×3×H×W tensor with values in [0,1].
Video conditions_to_video(std::span<const ConditionFrame> frames);

/// Same as conditions_to_video applied to a single frame.
Image condition_to_image(const ConditionFrame& frame);

} // namespace fcvg
