#include "fcvg/diffusion.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "fcvg/error.hpp"

namespace fcvg {
namespace {

void check_t(int t, const NoiseSchedule& sched, int lo = 0) {
    if (t < lo || t > sched.steps()) {
        throw DomainError("time step " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(sched.steps()) + "]");
    }
}

// out = a·x + b·y
Video combine(double a, const Video& x, double b, const Video& y, const char* what) {
    require_same_shape(x, y, what);
    Video out = x;
    auto o = out.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * o[i] + b * yv[i];
    return out;
}

} // namespace

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "vp_linear") return ScheduleKind::vp_linear;
    if (name == "vp_cosine") return ScheduleKind::vp_cosine;
    if (name == "custom") return ScheduleKind::custom;
    throw DomainError("unknown schedule kind '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::vp_linear: return "vp_linear";
        case ScheduleKind::vp_cosine: return "vp_cosine";
        case ScheduleKind::custom: return "custom";
    }
    return "custom";
}

NoiseSchedule NoiseSchedule::custom(std::vector<double> alphas, std::vector<double> sigmas) {
    if (alphas.size() < 2 || alphas.size() != sigmas.size()) {
        throw DomainError("schedule tables need T+1 >= 2 entries of equal length");
    }
    if (alphas[0] != 1.0 || sigmas[0] != 0.0) throw DomainError("schedule must start at alpha_0 = 1, sigma_0 = 0");
    for (std::size_t t = 0; t < alphas.size(); ++t) {
        if (!std::isfinite(alphas[t]) || !std::isfinite(sigmas[t]) || sigmas[t] < 0.0) {
            throw DomainError("schedule entries must be finite with sigma >= 0");
        }
        if (t > 0 && sigmas[t] < sigmas[t - 1]) throw DomainError("sigma must be non-decreasing in t");
        if (t > 0 && !(sigmas[t] > 0.0)) throw DomainError("sigma_t must be positive for t >= 1");
    }
    NoiseSchedule s;
    s.kind_ = ScheduleKind::custom;
    s.alphas_ = std::move(alphas);
    s.sigmas_ = std::move(sigmas);
    return s;
}

bool NoiseSchedule::variance_preserving() const {
    for (std::size_t t = 0; t < alphas_.size(); ++t) {
        if (std::abs(alphas_[t] * alphas_[t] + sigmas_[t] * sigmas_[t] - 1.0) > 1e-12) return false;
    }
    return true;
}

nlohmann::json NoiseSchedule::to_json() const {
    return {{"kind", to_string(kind_)}, {"T", steps()}, {"alphas", alphas_}, {"sigmas", sigmas_}};
}

NoiseSchedule NoiseSchedule::from_json(const nlohmann::json& j) {
    const ScheduleKind kind = parse_schedule_kind(j.at("kind").get<std::string>());
    if (kind != ScheduleKind::custom) return make_schedule(j.at("T").get<int>(), kind);
    return custom(j.at("alphas").get<std::vector<double>>(), j.at("sigmas").get<std::vector<double>>());
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
    if (steps < 1) throw DomainError("schedule needs T >= 1");
    NoiseSchedule s;
    s.kind_ = kind;
    s.alphas_.resize(steps + 1);
    s.sigmas_.resize(steps + 1);
    switch (kind) {
        case ScheduleKind::vp_linear: {
            constexpr double kMaxVar = 1.0 - 1e-4;
            for (int t = 0; t <= steps; ++t) {
                const double var = kMaxVar * t / steps;
                s.sigmas_[t] = std::sqrt(var);
                s.alphas_[t] = std::sqrt(1.0 - var);
            }
            break;
        }
        case ScheduleKind::vp_cosine: {
            constexpr double kOffset = 0.008;
            const double norm = std::cos(0.5 * std::numbers::pi * kOffset / (1.0 + kOffset));
            for (int t = 0; t <= steps; ++t) {
                const double a = std::cos(0.5 * std::numbers::pi * (static_cast<double>(t) / steps + kOffset) /
                                          (1.0 + kOffset)) / norm;
                s.alphas_[t] = std::max(a, 0.0);
                s.sigmas_[t] = std::sqrt(std::max(0.0, 1.0 - s.alphas_[t] * s.alphas_[t]));
            }
            s.alphas_[0] = 1.0;
            s.sigmas_[0] = 0.0;
            break;
        }
        case ScheduleKind::custom:
            throw DomainError("custom schedules are built with NoiseSchedule::custom");
    }
    return s;
}

Video add_noise(const Video& z, const Video& eps, int t, const NoiseSchedule& sched) {
    check_t(t, sched);
    return combine(sched.alpha(t), z, sched.sigma(t), eps, "add_noise");
}

Video v_target(const Video& z, const Video& eps, int t, const NoiseSchedule& sched) {
    check_t(t, sched);
    return combine(-sched.sigma(t), z, sched.alpha(t), eps, "v_target");
}

Video v_to_x0(const Video& z_t, const Video& v, int t, const NoiseSchedule& sched) {
    check_t(t, sched);
    if (!sched.variance_preserving()) throw UnsupportedError("v_to_x0 requires a variance-preserving schedule");
    return combine(sched.alpha(t), z_t, -sched.sigma(t), v, "v_to_x0");
}

StepCoefficients step_coefficients(int t, const NoiseSchedule& sched) {
    check_t(t, sched, 1);
    const double carry = sched.sigma(t - 1) / sched.sigma(t);
    return {carry, sched.alpha(t - 1) - carry * sched.alpha(t)};
}

Video ddim_step(const Video& z_t, const Video& x0_hat, int t, const NoiseSchedule& sched) {
    check_t(t, sched, 1);
    require_same_shape(z_t, x0_hat, "ddim_step");
    if (t == 1 && sched.sigma(0) == 0.0) return x0_hat;
    const double a_prev = sched.alpha(t - 1), s_prev = sched.sigma(t - 1);
    const double a_t = sched.alpha(t), s_t = sched.sigma(t);
    Video out = z_t;
    auto o = out.values();
    auto x = x0_hat.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double eps_hat = (o[i] - a_t * x[i]) / s_t;
        o[i] = a_prev * x[i] + s_prev * eps_hat;
    }
    return out;
}

LatentCodec LatentCodec::fixed_linear(int channels, std::vector<double> matrix) {
    if (channels <= 0 || matrix.size() != static_cast<std::size_t>(channels) * channels) {
        throw StructuralError("codec matrix must be channels x channels");
    }
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(matrix.data(),
                                                                                               channels, channels);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw DomainError("codec matrix is singular");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> inv = lu.inverse();

    LatentCodec codec;
    codec.mode_ = Mode::fixed_linear;
    codec.channels_ = channels;
    codec.forward_ = std::move(matrix);
    codec.inverse_.assign(inv.data(), inv.data() + inv.size());
    return codec;
}

Video LatentCodec::apply(const Video& x, const std::vector<double>& m) const {
    if (x.channels() != channels_) throw StructuralError("codec channel count does not match input");
    Video out(x.frames(), x.channels(), x.height(), x.width());
    for (int n = 0; n < x.frames(); ++n) {
        for (int y = 0; y < x.height(); ++y) {
            for (int xx = 0; xx < x.width(); ++xx) {
                for (int co = 0; co < channels_; ++co) {
                    double acc = 0.0;
                    for (int ci = 0; ci < channels_; ++ci) acc += m[co * channels_ + ci] * x.at(n, ci, y, xx);
                    out.at(n, co, y, xx) = acc;
                }
            }
        }
    }
    return out;
}

Video LatentCodec::encode(const Video& x) const { return mode_ == Mode::identity ? x : apply(x, forward_); }
Video LatentCodec::decode(const Video& z) const { return mode_ == Mode::identity ? z : apply(z, inverse_); }

Image LatentCodec::encode(const Image& x) const {
    if (mode_ == Mode::identity) return x;
    return encode(Video::from_frames(std::span(&x, 1))).frame_image(0);
}

Image LatentCodec::decode(const Image& z) const {
    if (mode_ == Mode::identity) return z;
    return decode(Video::from_frames(std::span(&z, 1))).frame_image(0);
}

} // namespace fcvg
