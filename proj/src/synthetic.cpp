#include "fcvg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fcvg/error.hpp"
#include "fcvg/rng.hpp"

namespace fcvg {

MotionKind parse_motion_kind(std::string_view name) {
    if (name == "translate") return MotionKind::translate;
    if (name == "rotate") return MotionKind::rotate;
    if (name == "scale") return MotionKind::scale;
    throw DomainError("unknown motion kind '" + std::string(name) + "'");
}

std::string_view to_string(MotionKind kind) {
    switch (kind) {
        case MotionKind::translate: return "translate";
        case MotionKind::rotate: return "rotate";
        case MotionKind::scale: return "scale";
    }
    return "translate";
}

nlohmann::json to_json(const SyntheticSpec& s) {
    return {{"canvas", {{"w", s.canvas.width}, {"h", s.canvas.height}}},
            {"n_segments", s.n_segments},
            {"motion", to_string(s.motion)},
            {"magnitude", s.magnitude},
            {"frames", s.frames},
            {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec s) {
    if (!j.is_object()) throw DomainError("synthetic spec must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        try {
            if (k == "canvas") s.canvas = {it->at("w").get<int>(), it->at("h").get<int>()};
            else if (k == "n_segments") s.n_segments = it->get<int>();
            else if (k == "motion") s.motion = parse_motion_kind(it->get<std::string>());
            else if (k == "magnitude") s.magnitude = it->get<double>();
            else if (k == "frames") s.frames = it->get<int>();
            else if (k == "seed") s.seed = it->get<std::uint64_t>();
            else throw DomainError("unknown synthetic spec key '" + k + "'");
        } catch (const nlohmann::json::exception& e) {
            throw DomainError("synthetic spec key '" + k + "': " + e.what());
        }
    }
    return s;
}

Image render_segments(const ConditionGeometry& geometry, std::span<const Rgb> colours) {
    if (colours.size() < geometry.lines.size()) throw StructuralError("render_segments: missing colours");
    Image img(3, geometry.canvas.height, geometry.canvas.width);
    for (std::size_t k = 0; k < geometry.lines.size(); ++k) {
        const Rgb c = colours[k];
        for_each_segment_pixel(geometry.lines[k].segment, geometry.canvas, [&](int x, int y) {
            for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = c[ch] / 255.0;
        });
    }
    return img;
}

SyntheticClip synth_clip(const SyntheticSpec& spec) {
    const int W = spec.canvas.width, H = spec.canvas.height;
    if (W < 8 || H < 8) throw DomainError("synthetic canvas must be at least 8x8");
    if (spec.n_segments < 1) throw DomainError("synthetic clip needs at least one segment");
    if (spec.frames < 2) throw DomainError("synthetic clip needs at least 2 frames");
    if (!std::isfinite(spec.magnitude)) throw DomainError("motion magnitude must be finite");

    // Admissible coordinates keep the 2-px stroke one pixel inside the canvas.
    const double lo = 1.0, hi_x = W - 2.0, hi_y = H - 2.0;
    const double cx = W / 2.0, cy = H / 2.0;
    Rng rng(spec.seed);

    double dx = 0.0, dy = 0.0;
    double box_x0 = lo, box_x1 = hi_x, box_y0 = lo, box_y1 = hi_y;
    bool disc = false;
    double radius = 0.0;
    switch (spec.motion) {
        case MotionKind::translate: {
            const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
            dx = spec.magnitude * std::cos(theta);
            dy = spec.magnitude * std::sin(theta);
            box_x0 = lo + std::max(0.0, -dx);
            box_x1 = hi_x - std::max(0.0, dx);
            box_y0 = lo + std::max(0.0, -dy);
            box_y1 = hi_y - std::max(0.0, dy);
            break;
        }
        case MotionKind::rotate:
            disc = true;
            radius = std::min(cx - lo, hi_x - cx);
            radius = std::min({radius, cy - lo, hi_y - cy}) - 0.5;
            break;
        case MotionKind::scale: {
            const double final_scale = 1.0 + spec.magnitude;
            if (!(final_scale > 0.0)) throw DomainError("scale motion must keep a positive size");
            const double half = (std::min({cx - lo, hi_x - cx, cy - lo, hi_y - cy}) - 0.5) / std::max(1.0, final_scale);
            box_x0 = cx - half;
            box_x1 = cx + half;
            box_y0 = cy - half;
            box_y1 = cy + half;
            break;
        }
    }
    if (!(box_x1 - box_x0 >= 2.0 && box_y1 - box_y0 >= 2.0) || (disc && radius < 2.0)) {
        throw DomainError("motion magnitude moves the geometry outside the canvas");
    }

    auto draw_point = [&]() -> Point2 {
        if (!disc) return {rng.uniform(box_x0, box_x1), rng.uniform(box_y0, box_y1)};
        for (;;) {
            const double x = rng.uniform(-radius, radius), y = rng.uniform(-radius, radius);
            if (x * x + y * y <= radius * radius) return {cx + x, cy + y};
        }
    };
    const double min_len = std::min(3.0, 0.5 * std::min(box_x1 - box_x0, box_y1 - box_y0));

    SyntheticClip out;
    std::vector<LineSegment> base;
    for (int k = 0; k < spec.n_segments; ++k) {
        Point2 a = draw_point(), b = draw_point();
        while (std::hypot(a.x - b.x, a.y - b.y) < min_len) b = draw_point();
        base.push_back({a, b});
        out.colours.push_back({static_cast<std::uint8_t>(90 + rng.below(166)),
                               static_cast<std::uint8_t>(90 + rng.below(166)),
                               static_cast<std::uint8_t>(90 + rng.below(166))});
    }

    auto move = [&](Point2 p, double u) -> Point2 {
        switch (spec.motion) {
            case MotionKind::translate:
                return {p.x + u * dx, p.y + u * dy};
            case MotionKind::rotate: {
                const double a = u * spec.magnitude, c = std::cos(a), s = std::sin(a);
                return {cx + c * (p.x - cx) - s * (p.y - cy), cy + s * (p.x - cx) + c * (p.y - cy)};
            }
            case MotionKind::scale: {
                const double f = 1.0 + u * spec.magnitude;
                return {cx + f * (p.x - cx), cy + f * (p.y - cy)};
            }
        }
        return p;
    };

    out.clip = Video(spec.frames, 3, H, W);
    for (int i = 0; i < spec.frames; ++i) {
        const double u = static_cast<double>(i) / (spec.frames - 1);
        ConditionGeometry g;
        g.canvas = spec.canvas;
        for (int k = 0; k < spec.n_segments; ++k) {
            g.lines.push_back({k, {move(base[k].p0, u), move(base[k].p1, u)}});
        }
        out.clip.set_frame(i, render_segments(g, out.colours));
        out.geometry.push_back(std::move(g));
    }
    return out;
}

TrainingClip make_training_clip(const SyntheticClip& clip, std::uint64_t palette_seed) {
    const auto seq = build_condition_sequences(clip.start(), clip.end(), clip.clip.frames(),
                                               EasingCurve(EasingKind::linear));
    const auto rasters = rasterize_all(seq.forward, palette_seed);
    return {clip.clip, clip.clip.frame_image(0), conditions_to_video(rasters)};
}

std::vector<TrainingClip> synthetic_training_set(const SyntheticSpec& base, int count) {
    if (count < 1) throw DomainError("training set needs at least one clip");
    std::vector<TrainingClip> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        SyntheticSpec spec = base;
        spec.seed = base.seed + static_cast<std::uint64_t>(k);
        out.push_back(make_training_clip(synth_clip(spec), spec.seed));
    }
    return out;
}

} // namespace fcvg
