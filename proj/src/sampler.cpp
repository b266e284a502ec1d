#include "fcvg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <string>

#include "fcvg/error.hpp"
#include "fcvg/rng.hpp"

namespace fcvg {

std::vector<double> fusion_weights(int frames) {
    if (frames < 2) throw DomainError("fusion weights need at least 2 frames");
    std::vector<double> w(frames);
    for (int i = 0; i < frames; ++i) w[i] = 1.0 - static_cast<double>(i) / (frames - 1);
    return w;
}

Video flip_time(const Video& z) {
    Video out = z;
    const int n = z.frames();
    for (int i = 0; i < n; ++i) {
        auto src = z.frame(n - 1 - i);
        std::copy(src.begin(), src.end(), out.frame(i).begin());
    }
    return out;
}

Video fuse(const Video& z_fwd, const Video& z_bwd_flipped, std::span<const double> w) {
    require_same_shape(z_fwd, z_bwd_flipped, "fuse");
    if (w.size() != static_cast<std::size_t>(z_fwd.frames())) {
        throw StructuralError("fuse: " + std::to_string(w.size()) + " weights for " + std::to_string(z_fwd.frames()) +
                              " frames");
    }
    Video out = z_fwd;
    for (int i = 0; i < z_fwd.frames(); ++i) {
        auto o = out.frame(i);
        auto b = z_bwd_flipped.frame(i);
        const double lam = w[i];
        for (std::size_t k = 0; k < o.size(); ++k) o[k] = lam * o[k] + (1.0 - lam) * b[k];
    }
    return out;
}

nlohmann::json to_json(const SamplerConfig& cfg) {
    nlohmann::json j = {{"steps", cfg.steps},
                        {"gamma", cfg.gamma},
                        {"seed", cfg.seed},
                        {"frames", cfg.frames},
                        {"schedule", to_string(cfg.schedule)},
                        {"palette_seed", cfg.palette_seed}};
    if (cfg.lambda) j["lambda"] = *cfg.lambda;
    return j;
}

SamplerConfig sampler_config_from_json(const nlohmann::json& j, SamplerConfig cfg) {
    if (!j.is_object()) throw DomainError("sampler config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        try {
            if (k == "steps") cfg.steps = it->get<int>();
            else if (k == "gamma") cfg.gamma = it->get<double>();
            else if (k == "seed") cfg.seed = it->get<std::uint64_t>();
            else if (k == "frames") cfg.frames = it->get<int>();
            else if (k == "schedule") cfg.schedule = parse_schedule_kind(it->get<std::string>());
            else if (k == "palette_seed") cfg.palette_seed = it->get<std::uint64_t>();
            else if (k == "lambda") cfg.lambda = it->get<std::vector<double>>();
            else throw DomainError("unknown sampler config key '" + k + "'");
        } catch (const nlohmann::json::exception& e) {
            throw DomainError("sampler config key '" + k + "': " + e.what());
        }
    }
    if (cfg.steps < 1) throw DomainError("steps must be >= 1");
    if (cfg.frames < 2) throw DomainError("frames must be >= 2");
    if (!std::isfinite(cfg.gamma)) throw DomainError("gamma must be finite");
    if (cfg.lambda && cfg.lambda->size() != static_cast<std::size_t>(cfg.frames)) {
        throw DomainError("lambda override must have one weight per frame");
    }
    return cfg;
}

int threads_from_env() {
    const char* v = std::getenv("FCVG_THREADS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || n < 1) return 1;
    return static_cast<int>(std::min(n, 64L));
}

Video draw_initial_noise(std::uint64_t seed, int frames, int channels, int height, int width) {
    Video z(frames, channels, height, width);
    Rng rng(seed);
    for (double& v : z.values()) v = rng.normal();
    return z;
}

Video run_bidirectional(const BidirectionalInputs& in, const Denoiser& denoiser, double gamma,
                        std::span<const double> lambda, int threads, SampleStats* stats) {
    const NoiseSchedule& sched = denoiser.schedule();
    const Video& zT = in.initial_noise;
    if (zT.frames() < 2) throw DomainError("sampling needs at least 2 frames");
    if (!zT.frame_shape_matches(in.start_latent) || !zT.frame_shape_matches(in.end_latent)) {
        throw StructuralError("key-frame latents do not match the latent frame shape");
    }
    if (lambda.size() != static_cast<std::size_t>(zT.frames())) {
        throw StructuralError("fusion weights length differs from frame count");
    }
    if (!zT.all_finite()) throw NumericalError("initial noise contains non-finite values");

    Video z = zT;
    for (int t = sched.steps(); t >= 1; --t) {
        const Video z_flip = flip_time(z);
        auto backward = [&] {
            return ddim_step(z_flip, denoiser.predict(z_flip, in.end_latent, in.cond_backward, t, gamma), t, sched);
        };
        Video fwd, bwd;
        if (threads > 1) {
            auto pending = std::async(std::launch::async, backward);
            fwd = ddim_step(z, denoiser.predict(z, in.start_latent, in.cond_forward, t, gamma), t, sched);
            bwd = pending.get();
        } else {
            fwd = ddim_step(z, denoiser.predict(z, in.start_latent, in.cond_forward, t, gamma), t, sched);
            bwd = backward();
        }
        if (stats) stats->denoiser_calls += 2;
        z = fuse(fwd, flip_time(bwd), lambda);
        if (!z.all_finite()) {
            throw NumericalError("non-finite latent after step t=" + std::to_string(t) +
                                 " (forward finite: " + (fwd.all_finite() ? "yes" : "no") +
                                 ", backward finite: " + (bwd.all_finite() ? "yes" : "no") + ")");
        }
    }
    return z;
}

SampleResult sample(const Image& start, const Image& end, const ConditionGeometry& g1, const ConditionGeometry& gN,
                    const EasingCurve& curve, const Denoiser& denoiser, const SamplerConfig& cfg,
                    const LatentCodec& codec, const Video* initial_noise) {
    if (!start.same_shape(end)) throw StructuralError("start and end images differ in shape");
    if (cfg.frames < 2) throw DomainError("sampling needs at least 2 frames");
    if (cfg.steps != denoiser.schedule().steps()) {
        throw StructuralError("sampler steps (" + std::to_string(cfg.steps) + ") differ from the denoiser schedule (" +
                              std::to_string(denoiser.schedule().steps()) + ")");
    }
    if (g1.canvas.width != start.width() || g1.canvas.height != start.height()) {
        throw StructuralError("condition canvas does not match the key-frame size");
    }

    SampleResult result;
    result.lambda = cfg.lambda ? *cfg.lambda : fusion_weights(cfg.frames);
    if (result.lambda.size() != static_cast<std::size_t>(cfg.frames)) {
        throw StructuralError("lambda override must have one weight per frame");
    }

    const ConditionSequences seq = build_condition_sequences(g1, gN, cfg.frames, curve);
    result.forward_conditions = rasterize_all(seq.forward, cfg.palette_seed);
    const auto backward_frames = rasterize_all(seq.backward, cfg.palette_seed);

    BidirectionalInputs in;
    in.start_latent = codec.encode(start);
    in.end_latent = codec.encode(end);
    in.cond_forward = conditions_to_video(result.forward_conditions);
    in.cond_backward = conditions_to_video(backward_frames);
    const Image& lat = in.start_latent;
    if (initial_noise) {
        if (initial_noise->frames() != cfg.frames || !initial_noise->frame_shape_matches(lat)) {
            throw StructuralError("initial noise shape " + initial_noise->shape_string() + " does not match the run");
        }
        in.initial_noise = *initial_noise;
    } else {
        in.initial_noise = draw_initial_noise(cfg.seed, cfg.frames, lat.channels(), lat.height(), lat.width());
        result.stats.noise_draws = 1;
    }

    result.latent = run_bidirectional(in, denoiser, cfg.gamma, result.lambda, cfg.threads, &result.stats);
    result.video = codec.decode(result.latent);
    return result;
}

} // namespace fcvg
