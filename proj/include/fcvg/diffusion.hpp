#pragma once

#include <string_view>
#include <vector>

#include "fcvg/tensor.hpp"
#include "json.hpp"

namespace fcvg {

enum class ScheduleKind { vp_linear, vp_cosine, custom };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ScheduleKind kind);

/// Per-step (alpha_t, sigma_t) for z_t = alpha_t·z + sigma_t·eps, t = 0..T.
class NoiseSchedule {
public:
    /// Arbitrary tables; alpha_0 must be 1, sigma_0 must be 0 and sigma must
    /// be non-decreasing in t.
    static NoiseSchedule custom(std::vector<double> alphas, std::vector<double> sigmas);

    int steps() const { return static_cast<int>(alphas_.size()) - 1; }
    ScheduleKind kind() const { return kind_; }
    double alpha(int t) const { return alphas_.at(t); }
    double sigma(int t) const { return sigmas_.at(t); }
    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& sigmas() const { return sigmas_; }

    /// alpha_t² + sigma_t² = 1 at every t (to 1e-12).
    bool variance_preserving() const;

    nlohmann::json to_json() const;
    static NoiseSchedule from_json(const nlohmann::json& j);

    bool operator==(const NoiseSchedule&) const = default;

private:
    friend NoiseSchedule make_schedule(int, ScheduleKind);
    ScheduleKind kind_ = ScheduleKind::custom;
    std::vector<double> alphas_;
    std::vector<double> sigmas_;
};

/// vp_linear: sigma_t² grows linearly in t up to 1 - 1e-4.
/// vp_cosine: squared-cosine alpha profile with offset 0.008.
NoiseSchedule make_schedule(int steps, ScheduleKind kind);

inline constexpr int kDefaultSteps = 25;

Video add_noise(const Video& z, const Video& eps, int t, const NoiseSchedule& sched);
Video v_target(const Video& z, const Video& eps, int t, const NoiseSchedule& sched);
/// Clean-latent estimate from a v prediction; only defined for vp schedules.
Video v_to_x0(const Video& z_t, const Video& v, int t, const NoiseSchedule& sched);

/// Deterministic (eta = 0) update from t to t-1 given an x0 estimate:
/// z_{t-1} = alpha_{t-1}·x0 + sigma_{t-1}·(z_t - alpha_t·x0)/sigma_t.
Video ddim_step(const Video& z_t, const Video& x0_hat, int t, const NoiseSchedule& sched);

/// Scalar coefficients of ddim_step: z_{t-1} = carry·z_t + signal·x0_hat.
struct StepCoefficients {
    double carry;
    double signal;
};
StepCoefficients step_coefficients(int t, const NoiseSchedule& sched);

/// Map between pixel space and latent space. At desk scale this is either the
/// identity or a fixed invertible per-pixel channel mix.
class LatentCodec {
public:
    enum class Mode { identity, fixed_linear };

    LatentCodec() = default;
    /// Row-major channels×channels matrix; must be invertible.
    static LatentCodec fixed_linear(int channels, std::vector<double> matrix);

    Mode mode() const { return mode_; }
    Image encode(const Image& x) const;
    Image decode(const Image& z) const;
    Video encode(const Video& x) const;
    Video decode(const Video& z) const;

private:
    Video apply(const Video& x, const std::vector<double>& m) const;

    Mode mode_ = Mode::identity;
    int channels_ = 0;
    std::vector<double> forward_;
    std::vector<double> inverse_;
};

} // namespace fcvg
