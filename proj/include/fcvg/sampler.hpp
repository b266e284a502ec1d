#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fcvg/denoiser.hpp"
#include "fcvg/diffusion.hpp"
#include "fcvg/easing.hpp"
#include "fcvg/geometry.hpp"
#include "fcvg/raster.hpp"
#include "json.hpp"

namespace fcvg {

/// lambda_i = 1 - i/(N-1) for 0-based frame i: 1 at the first frame, 0 at the last.
std::vector<double> fusion_weights(int frames);

/// Reverses frame order.
Video flip_time(const Video& z);

/// Frame i of the result is w[i]·z_fwd[i] + (1 - w[i])·z_bwd_flipped[i].
Video fuse(const Video& z_fwd, const Video& z_bwd_flipped, std::span<const double> w);

struct SamplerConfig {
    int steps = kDefaultSteps;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    int frames = 25;
    ScheduleKind schedule = ScheduleKind::vp_cosine;
    std::uint64_t palette_seed = 0;
    /// Overrides the default fusion weights when set (length must equal frames).
    std::optional<std::vector<double>> lambda;
    /// 1 runs the two directions serially; >1 runs them concurrently.
    int threads = 1;
};

nlohmann::json to_json(const SamplerConfig& cfg);
/// Rejects unknown keys. Missing keys keep the values already in `base`.
SamplerConfig sampler_config_from_json(const nlohmann::json& j, SamplerConfig base = {});

/// Reads FCVG_THREADS (default 1, minimum 1).
int threads_from_env();

struct SampleStats {
    int denoiser_calls = 0;
    int noise_draws = 0;  ///< number of Gaussian tensors drawn (1 = only z_T)
};

/// Everything the bidirectional loop consumes, already in latent space.
struct BidirectionalInputs {
    Video initial_noise;
    Image start_latent;
    Image end_latent;
    Video cond_forward;
    Video cond_backward;
};

/// The time-reversal loop. For t = T..1:
///   fwd  = ddim_step(z_t,       f(z_t,       start, c_fwd, t), t)
///   bwd  = ddim_step(flip(z_t), f(flip(z_t), end,   c_bwd, t), t)
///   z_{t-1} = fuse(fwd, flip(bwd), lambda)
/// Throws NumericalError if a latent turns non-finite.
Video run_bidirectional(const BidirectionalInputs& inputs, const Denoiser& denoiser, double gamma,
                        std::span<const double> lambda, int threads = 1, SampleStats* stats = nullptr);

/// Seeded standard-normal N×C×H×W tensor.
Video draw_initial_noise(std::uint64_t seed, int frames, int channels, int height, int width);

struct SampleResult {
    Video video;   ///< decoded frames
    Video latent;  ///< z_0
    std::vector<double> lambda;
    std::vector<ConditionFrame> forward_conditions;
    SampleStats stats;
};

/// Full inbetweening pipeline: interpolates and rasterizes the frame-wise
/// conditions, encodes the key frames, draws z_T from cfg.seed (or uses
/// `initial_noise`), runs the bidirectional loop and decodes.
SampleResult sample(const Image& start, const Image& end, const ConditionGeometry& g1, const ConditionGeometry& gN,
                    const EasingCurve& curve, const Denoiser& denoiser, const SamplerConfig& cfg,
                    const LatentCodec& codec = {}, const Video* initial_noise = nullptr);

} // namespace fcvg
