#pragma once

#include <atomic>
#include <string>

#include "fcvg/diffusion.hpp"
#include "fcvg/tensor.hpp"

namespace fcvg {

/// f_theta: maps a noisy latent clip to an estimate of the clean latent clip.
///
/// Implementations must preserve the input shape, be deterministic, and ignore
/// `conditions` entirely when `gamma == 0`. Every denoiser is bound to the
/// noise schedule its time index refers to.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    /// `endpoint` is the latent of the key frame this direction starts from;
    /// `conditions` is N×3×H×W in [0,1], frame-aligned with `z_t`.
    virtual Video predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                          double gamma) const = 0;

    virtual const NoiseSchedule& schedule() const = 0;
    virtual std::string id() const = 0;
};

/// Per-channel re-standardisation of `y_con` to the mean / std of `y_base`
/// (population statistics over H×W). A channel of y_con whose std is below
/// kCrossNormEps maps to the constant mean of the base channel.
Image cross_normalize(const Image& y_con, const Image& y_base);
/// Frame-wise application of the Image overload.
Video cross_normalize(const Video& y_con, const Video& y_base);

inline constexpr double kCrossNormEps = 1e-6;

/// y_base + gamma·y_con_aligned.
Image inject(const Image& y_base, const Image& y_con_aligned, double gamma);
Video inject(const Video& y_base, const Video& y_con_aligned, double gamma);

/// Closed-form posterior mean E[z | z_t] for an independent Gaussian prior
/// z ~ N(m, diag(sigma2)) under z_t = alpha_t·z + sigma_t·eps:
///
///   x0 = m + alpha_t·sigma2 / (alpha_t²·sigma2 + sigma_t²) · (z_t - alpha_t·m)
///
/// The prior mean is m = mu + gamma·cond_gain·features(conditions), where the
/// feature of a pixel is the mean of its three condition channels, broadcast
/// over latent channels. With `anchor_first_frame` the prior mean of frame 0
/// is the endpoint latent instead (no condition shift on that frame).
class AnalyticGaussianDenoiser final : public Denoiser {
public:
    AnalyticGaussianDenoiser(NoiseSchedule schedule, Video mu, Video sigma2, double cond_gain,
                             bool anchor_first_frame = false);

    Video predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                  double gamma) const override;
    const NoiseSchedule& schedule() const override { return schedule_; }
    std::string id() const override { return "analytic-gaussian"; }

    const Video& mu() const { return mu_; }
    const Video& sigma2() const { return sigma2_; }
    double cond_gain() const { return cond_gain_; }
    bool anchor_first_frame() const { return anchor_; }

    /// The condition features used in the prior-mean shift.
    static Video condition_features(const Video& conditions, int latent_channels);

private:
    NoiseSchedule schedule_;
    Video mu_;
    Video sigma2_;
    double cond_gain_;
    bool anchor_;
};

/// Forwards to another denoiser and counts invocations.
class CountingDenoiser final : public Denoiser {
public:
    explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

    Video predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                  double gamma) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.predict(z_t, endpoint, conditions, t, gamma);
    }
    const NoiseSchedule& schedule() const override { return inner_.schedule(); }
    std::string id() const override { return inner_.id(); }

    long calls() const { return calls_.load(); }

private:
    const Denoiser& inner_;
    mutable std::atomic<long> calls_{0};
};

} // namespace fcvg
