#include "fcvg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "fcvg/error.hpp"
#include "fcvg/rng.hpp"

namespace fcvg {
namespace {

// Floor division for possibly negative numerators (denominator > 0).
std::int64_t floor_div(std::int64_t num, std::int64_t den) {
    std::int64_t q = num / den;
    if ((num % den != 0) && (num < 0)) --q;
    return q;
}

// Liang-Barsky clip against [lo, hi]^2. Returns false if nothing remains.
bool clip_to_box(Point2& a, Point2& b, double lo_x, double lo_y, double hi_x, double hi_y) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - lo_x, hi_x - a.x, a.y - lo_y, hi_y - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
        if (t0 > t1) return false;
    }
    const Point2 a0 = a;
    a = {a0.x + t0 * dx, a0.y + t0 * dy};
    b = {a0.x + t1 * dx, a0.y + t1 * dy};
    return true;
}

Rgb hsv_to_rgb(double hue_deg) {
    const double h = hue_deg / 60.0;
    const int sector = static_cast<int>(std::floor(h)) % 6;
    const double f = h - std::floor(h);
    auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
    const std::uint8_t up = byte(f), down = byte(1.0 - f);
    switch (sector) {
        case 0: return {255, up, 0};
        case 1: return {down, 255, 0};
        case 2: return {0, 255, up};
        case 3: return {0, down, 255};
        case 4: return {up, 0, 255};
        default: return {255, 0, down};
    }
}

constexpr std::array<Rgb, 6> kPosePalette = {{
    {255, 255, 255},
    {200, 200, 120},
    {120, 200, 200},
    {200, 120, 200},
    {160, 160, 160},
    {240, 180, 140},
}};

} // namespace

void for_each_segment_pixel(const LineSegment& seg, Canvas canvas, const std::function<void(int, int)>& visit) {
    Point2 a = seg.p0, b = seg.p1;
    // Very long segments are pre-clipped to a generous box around the canvas so
    // the pixel walk stays bounded.
    const double margin = 2.0 * (canvas.width + canvas.height) + 8.0;
    const double far = 4.0 * margin;
    if (std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x), std::abs(b.y)}) > far) {
        if (!clip_to_box(a, b, -margin, -margin, canvas.width + margin, canvas.height + margin)) return;
    }
    std::int64_t x0 = static_cast<std::int64_t>(std::floor(a.x));
    std::int64_t y0 = static_cast<std::int64_t>(std::floor(a.y));
    std::int64_t x1 = static_cast<std::int64_t>(std::floor(b.x));
    std::int64_t y1 = static_cast<std::int64_t>(std::floor(b.y));

    auto emit = [&](std::int64_t x, std::int64_t y) {
        if (x >= 0 && y >= 0 && x < canvas.width && y < canvas.height) visit(static_cast<int>(x), static_cast<int>(y));
    };

    const bool x_major = std::abs(x1 - x0) >= std::abs(y1 - y0);
    if (x_major) {
        if (x1 < x0) {
            std::swap(x0, x1);
            std::swap(y0, y1);
        }
        const std::int64_t dx = x1 - x0, dy = y1 - y0;
        for (std::int64_t k = 0; k <= dx; ++k) {
            const std::int64_t y = dx == 0 ? y0 : y0 + floor_div(2 * k * dy + dx, 2 * dx);
            emit(x0 + k, y);
            emit(x0 + k, y + 1);
        }
    } else {
        if (y1 < y0) {
            std::swap(x0, x1);
            std::swap(y0, y1);
        }
        const std::int64_t dx = x1 - x0, dy = y1 - y0;
        for (std::int64_t k = 0; k <= dy; ++k) {
            const std::int64_t x = x0 + floor_div(2 * k * dx + dy, 2 * dy);
            emit(x, y0 + k);
            emit(x + 1, y0 + k);
        }
    }
}

std::map<int, Rgb> line_palette(std::span<const int> match_ids, std::uint64_t palette_seed) {
    std::vector<int> ids(match_ids.begin(), match_ids.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    const std::size_t n = ids.size();
    std::vector<std::size_t> slot(n);
    for (std::size_t i = 0; i < n; ++i) slot[i] = i;
    Rng rng(palette_seed);
    for (std::size_t i = n; i > 1; --i) std::swap(slot[i - 1], slot[rng.below(i)]);

    std::map<int, Rgb> palette;
    for (std::size_t i = 0; i < n; ++i) palette[ids[i]] = hsv_to_rgb(360.0 * static_cast<double>(slot[i]) / n);
    return palette;
}

std::span<const Rgb> pose_palette() { return kPosePalette; }

ConditionFrame rasterize(const ConditionGeometry& geometry, std::uint64_t palette_seed) {
    const Canvas canvas = geometry.canvas;
    if (canvas.width <= 0 || canvas.height <= 0) throw DomainError("canvas dimensions must be positive");
    ConditionFrame frame(canvas.width, canvas.height);

    std::vector<const TaggedSegment*> order;
    std::vector<int> ids;
    for (const auto& l : geometry.lines) {
        order.push_back(&l);
        ids.push_back(l.match_id);
    }
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->match_id < b->match_id; });
    const auto palette = line_palette(ids, palette_seed);

    for (const auto* l : order) {
        const Rgb colour = palette.at(l->match_id);
        for_each_segment_pixel(l->segment, canvas, [&](int x, int y) { frame.set(x, y, colour); });
    }

    if (geometry.pose) {
        const auto& kps = geometry.pose->keypoints;
        const auto reserved = pose_palette();
        for (std::size_t e = 0; e < geometry.pose->edges.size(); ++e) {
            auto [i, j] = geometry.pose->edges[e];
            if (!kps[i].present || !kps[j].present) continue;
            if (kps[i].position == kps[j].position) continue;
            const Rgb colour = reserved[e % reserved.size()];
            for_each_segment_pixel({kps[i].position, kps[j].position}, canvas,
                                   [&](int x, int y) { frame.set(x, y, colour); });
        }
    }
    return frame;
}

std::vector<ConditionFrame> rasterize_all(std::span<const ConditionGeometry> geometries, std::uint64_t palette_seed) {
    std::vector<ConditionFrame> frames;
    frames.reserve(geometries.size());
    for (const auto& g : geometries) frames.push_back(rasterize(g, palette_seed));
    return frames;
}

Image condition_to_image(const ConditionFrame& frame) {
    Image img(3, frame.height, frame.width);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            const Rgb px = frame.at(x, y);
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = px[c] / 255.0;
        }
    }
    return img;
}

Video conditions_to_video(std::span<const ConditionFrame> frames) {
    if (frames.empty()) throw StructuralError("no condition frames");
    Video v(static_cast<int>(frames.size()), 3, frames[0].height, frames[0].width);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height) {
            throw StructuralError("condition frames differ in size");
        }
        v.set_frame(static_cast<int>(i), condition_to_image(frames[i]));
    }
    return v;
}

} // namespace fcvg
