#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fcvg/geometry.hpp"
#include "fcvg/raster.hpp"
#include "fcvg/tensor.hpp"
#include "fcvg/toy_denoiser.hpp"
#include "json.hpp"

namespace fcvg {

enum class MotionKind { translate, rotate, scale };

MotionKind parse_motion_kind(std::string_view name);
std::string_view to_string(MotionKind kind);

/// Moving-segment clip recipe. `magnitude` is pixels for translate, radians
/// for rotate (about the canvas centre) and the final relative size change for
/// scale (1 + magnitude at the last frame).
struct SyntheticSpec {
    Canvas canvas{32, 32};
    int n_segments = 3;
    MotionKind motion = MotionKind::translate;
    double magnitude = 8.0;
    int frames = 9;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const SyntheticSpec& spec);
/// Rejects unknown keys.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec base = {});

struct SyntheticClip {
    Video clip;                                ///< N×3×H×W in [0,1]
    std::vector<ConditionGeometry> geometry;   ///< exact per-frame segment positions
    std::vector<Rgb> colours;                  ///< per-segment clip colour
    const ConditionGeometry& start() const { return geometry.front(); }
    const ConditionGeometry& end() const { return geometry.back(); }
};

/// Deterministic given the spec. Geometry is constrained to stay at least one
/// pixel inside the canvas for the whole clip; DomainError if the motion
/// makes that impossible. Frame i sits at motion progress i/(N-1).
SyntheticClip synth_clip(const SyntheticSpec& spec);

/// Draws 2-px segments in the given colours on a black 3-channel frame.
Image render_segments(const ConditionGeometry& geometry, std::span<const Rgb> colours);

/// Pairs a clip with the frame-wise conditions the sampler would build for it
/// (linear interpolation of its key-frame geometry, rasterized with `palette_seed`).
TrainingClip make_training_clip(const SyntheticClip& clip, std::uint64_t palette_seed);

/// `count` clips drawn from `base` with seeds base.seed, base.seed+1, ...;
/// each clip uses its own seed as palette seed.
std::vector<TrainingClip> synthetic_training_set(const SyntheticSpec& base, int count);

} // namespace fcvg
