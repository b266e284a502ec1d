#include "fcvg/denoiser.hpp"

#include <cmath>

#include "fcvg/error.hpp"

namespace fcvg {
namespace {

struct Stats {
    double mean;
    double stddev;
};

Stats channel_stats(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var)};
}

} // namespace

Image cross_normalize(const Image& y_con, const Image& y_base) {
    if (!y_con.same_shape(y_base)) throw StructuralError("cross_normalize: feature shapes differ");
    Image out = y_con;
    const std::size_t plane = static_cast<std::size_t>(y_con.height()) * y_con.width();
    for (int c = 0; c < y_con.channels(); ++c) {
        auto src = y_con.values().subspan(c * plane, plane);
        auto dst = out.values().subspan(c * plane, plane);
        const Stats con = channel_stats(src);
        const Stats base = channel_stats(y_base.values().subspan(c * plane, plane));
        if (con.stddev < kCrossNormEps) {
            std::fill(dst.begin(), dst.end(), base.mean);
            continue;
        }
        const double scale = base.stddev / con.stddev;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = (src[i] - con.mean) * scale + base.mean;
    }
    return out;
}

Video cross_normalize(const Video& y_con, const Video& y_base) {
    require_same_shape(y_con, y_base, "cross_normalize");
    Video out(y_con.frames(), y_con.channels(), y_con.height(), y_con.width());
    for (int n = 0; n < y_con.frames(); ++n) {
        out.set_frame(n, cross_normalize(y_con.frame_image(n), y_base.frame_image(n)));
    }
    return out;
}

Image inject(const Image& y_base, const Image& y_con_aligned, double gamma) {
    if (!y_base.same_shape(y_con_aligned)) throw StructuralError("inject: feature shapes differ");
    Image out = y_base;
    auto o = out.values();
    auto c = y_con_aligned.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += gamma * c[i];
    return out;
}

Video inject(const Video& y_base, const Video& y_con_aligned, double gamma) {
    require_same_shape(y_base, y_con_aligned, "inject");
    Video out = y_base;
    auto o = out.values();
    auto c = y_con_aligned.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += gamma * c[i];
    return out;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(NoiseSchedule schedule, Video mu, Video sigma2, double cond_gain,
                                                   bool anchor_first_frame)
    : schedule_(std::move(schedule)),
      mu_(std::move(mu)),
      sigma2_(std::move(sigma2)),
      cond_gain_(cond_gain),
      anchor_(anchor_first_frame) {
    require_same_shape(mu_, sigma2_, "analytic prior");
    for (double s : sigma2_.values()) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("analytic prior variance must be positive");
    }
    if (!schedule_.variance_preserving()) throw UnsupportedError("analytic denoiser requires a vp schedule");
}

Video AnalyticGaussianDenoiser::condition_features(const Video& conditions, int latent_channels) {
    if (conditions.channels() != 3) throw StructuralError("condition rasters must have 3 channels");
    Video f(conditions.frames(), latent_channels, conditions.height(), conditions.width());
    for (int n = 0; n < conditions.frames(); ++n) {
        for (int y = 0; y < conditions.height(); ++y) {
            for (int x = 0; x < conditions.width(); ++x) {
                const double v =
                    (conditions.at(n, 0, y, x) + conditions.at(n, 1, y, x) + conditions.at(n, 2, y, x)) / 3.0;
                for (int c = 0; c < latent_channels; ++c) f.at(n, c, y, x) = v;
            }
        }
    }
    return f;
}

Video AnalyticGaussianDenoiser::predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                                        double gamma) const {
    require_same_shape(z_t, mu_, "analytic predict");
    if (t < 0 || t > schedule_.steps()) throw DomainError("analytic predict: time step out of range");
    if (schedule_.sigma(t) == 0.0) return z_t;

    Video mean = mu_;
    if (gamma != 0.0) {
        if (conditions.frames() != z_t.frames() || conditions.height() != z_t.height() ||
            conditions.width() != z_t.width()) {
            throw StructuralError("analytic predict: conditions " + conditions.shape_string() +
                                  " do not align with latent " + z_t.shape_string());
        }
        const Video feat = condition_features(conditions, z_t.channels());
        auto m = mean.values();
        auto f = feat.values();
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += gamma * cond_gain_ * f[i];
    }
    if (anchor_) {
        if (!z_t.frame_shape_matches(endpoint)) throw StructuralError("analytic predict: endpoint shape mismatch");
        mean.set_frame(0, endpoint);
    }

    const double a = schedule_.alpha(t);
    const double s2 = schedule_.sigma(t) * schedule_.sigma(t);
    Video out = mean;
    auto o = out.values();
    auto z = z_t.values();
    auto v = sigma2_.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double gain = a * v[i] / (a * a * v[i] + s2);
        o[i] = o[i] + gain * (z[i] - a * o[i]);
    }
    return out;
}

} // namespace fcvg
