#include "fcvg/toy_denoiser.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fcvg/error.hpp"
#include "fcvg/hash.hpp"
#include "fcvg/rng.hpp"
#include "json.hpp"

namespace fcvg {
namespace {

constexpr int kK = 3;  // kernel size

struct ConvShape {
    int in_channels;
    int out_channels;
    int height;
    int width;
};

// out[co] = b[co] + sum_ci w[co][ci] * in[ci], 3×3 same padding.
void conv_forward(std::span<const double> in, std::span<const double> w, std::span<const double> b, ConvShape s,
                  std::span<double> out) {
    const int H = s.height, W = s.width;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int co = 0; co < s.out_channels; ++co) {
        double* o = out.data() + co * plane;
        std::fill(o, o + plane, b[co]);
        for (int ci = 0; ci < s.in_channels; ++ci) {
            const double* src = in.data() + ci * plane;
            const double* k = w.data() + (static_cast<std::size_t>(co) * s.in_channels + ci) * kK * kK;
            for (int ky = 0; ky < kK; ++ky) {
                const int dy = ky - 1;
                const int y_lo = std::max(0, -dy), y_hi = std::min(H, H - dy);
                for (int kx = 0; kx < kK; ++kx) {
                    const int dx = kx - 1;
                    const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
                    const double kv = k[ky * kK + kx];
                    for (int y = y_lo; y < y_hi; ++y) {
                        double* orow = o + static_cast<std::size_t>(y) * W;
                        const double* irow = src + static_cast<std::size_t>(y + dy) * W + dx;
                        for (int x = x_lo; x < x_hi; ++x) orow[x] += kv * irow[x];
                    }
                }
            }
        }
    }
}

// Accumulates weight / bias gradients and (optionally) the input gradient.
void conv_backward(std::span<const double> in, std::span<const double> w, std::span<const double> grad_out,
                   ConvShape s, std::span<double> grad_w, std::span<double> grad_b, std::span<double> grad_in) {
    const int H = s.height, W = s.width;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int co = 0; co < s.out_channels; ++co) {
        const double* g = grad_out.data() + co * plane;
        grad_b[co] += std::accumulate(g, g + plane, 0.0);
        for (int ci = 0; ci < s.in_channels; ++ci) {
            const double* src = in.data() + ci * plane;
            const std::size_t kbase = (static_cast<std::size_t>(co) * s.in_channels + ci) * kK * kK;
            for (int ky = 0; ky < kK; ++ky) {
                const int dy = ky - 1;
                const int y_lo = std::max(0, -dy), y_hi = std::min(H, H - dy);
                for (int kx = 0; kx < kK; ++kx) {
                    const int dx = kx - 1;
                    const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
                    double acc = 0.0;
                    const double kv = w[kbase + ky * kK + kx];
                    for (int y = y_lo; y < y_hi; ++y) {
                        const double* grow = g + static_cast<std::size_t>(y) * W;
                        const double* irow = src + static_cast<std::size_t>(y + dy) * W + dx;
                        for (int x = x_lo; x < x_hi; ++x) acc += grow[x] * irow[x];
                        if (!grad_in.empty()) {
                            double* gin = grad_in.data() + ci * plane + static_cast<std::size_t>(y + dy) * W + dx;
                            for (int x = x_lo; x < x_hi; ++x) gin[x] += kv * grow[x];
                        }
                    }
                    grad_w[kbase + ky * kK + kx] += acc;
                }
            }
        }
    }
}

void tanh_inplace(std::span<double> v) {
    for (double& x : v) x = std::tanh(x);
}

struct ChannelNorm {
    double con_mean, con_std;
    double base_mean, base_std;
    bool constant;
};

} // namespace

struct ToyDenoiser::FrameCache {
    std::vector<double> input;  // (2C+2)×HW
    std::vector<double> cond;   // 3×HW
    std::vector<double> h1;     // hidden×HW, post-tanh
    std::vector<double> hc;     // hidden×HW, post-tanh
    std::vector<double> h;      // hidden×HW, after injection
    std::vector<double> h2;     // hidden×HW, post-tanh
    std::vector<ChannelNorm> norms;
    int height = 0, width = 0;
};

ToyDenoiser::ToyDenoiser(ToyArchitecture arch, NoiseSchedule schedule, std::uint64_t init_seed)
    : arch_(arch), schedule_(std::move(schedule)) {
    if (arch_.channels <= 0 || arch_.hidden <= 0) throw DomainError("toy architecture sizes must be positive");
    if (!schedule_.variance_preserving()) throw UnsupportedError("toy denoiser requires a vp schedule");
    const int C = arch_.channels, Hd = arch_.hidden;
    const std::pair<const char*, std::pair<int, int>> spec[] = {
        {"conv_in", {Hd, 2 * C + 2}}, {"conv_cond", {Hd, 3}}, {"conv_mid", {Hd, Hd}}, {"conv_out", {C, Hd}}};
    std::size_t offset = 0;
    for (const auto& [name, io] : spec) {
        Layer l{name, io.first, io.second, offset, 0};
        offset += static_cast<std::size_t>(io.first) * io.second * kK * kK;
        l.bias_offset = offset;
        offset += io.first;
        layers_.push_back(l);
    }
    params_.assign(offset, 0.0);

    Rng rng(init_seed);
    for (const auto& l : layers_) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(l.in_channels * kK * kK));
        const std::size_t n = static_cast<std::size_t>(l.out_channels) * l.in_channels * kK * kK;
        for (std::size_t i = 0; i < n; ++i) params_[l.weight_offset + i] = scale * rng.normal();
    }
}

std::string ToyDenoiser::id() const {
    Fnv1a h;
    h.update_values(std::span<const double>(params_));
    return "toy-conv-h" + std::to_string(arch_.hidden) + "-" + h.hex();
}

void ToyDenoiser::set_schedule(NoiseSchedule schedule) {
    if (!schedule.variance_preserving()) throw UnsupportedError("toy denoiser requires a vp schedule");
    schedule_ = std::move(schedule);
}

void ToyDenoiser::check_inputs(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                               double gamma) const {
    if (z_t.channels() != arch_.channels) throw StructuralError("toy denoiser: latent channel count mismatch");
    if (!z_t.frame_shape_matches(endpoint)) throw StructuralError("toy denoiser: endpoint shape mismatch");
    if (t < 0 || t > schedule_.steps()) throw DomainError("toy denoiser: time step out of range");
    if (gamma != 0.0) {
        if (conditions.frames() != z_t.frames() || conditions.channels() != 3 ||
            conditions.height() != z_t.height() || conditions.width() != z_t.width()) {
            throw StructuralError("toy denoiser: conditions " + conditions.shape_string() +
                                  " do not align with latent " + z_t.shape_string());
        }
    }
}

void ToyDenoiser::forward_frame(const Video& z_t, const Image& endpoint, const Video& conditions, int frame, int t,
                                double gamma, FrameCache& cache, std::span<double> v_out) const {
    const int C = arch_.channels, Hd = arch_.hidden;
    const int H = z_t.height(), W = z_t.width();
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    cache.height = H;
    cache.width = W;

    cache.input.resize((2 * C + 2) * plane);
    auto zf = z_t.frame(frame);
    std::copy(zf.begin(), zf.end(), cache.input.begin());
    std::copy(endpoint.values().begin(), endpoint.values().end(), cache.input.begin() + C * plane);
    const double position = z_t.frames() > 1 ? static_cast<double>(frame) / (z_t.frames() - 1) : 0.0;
    std::fill_n(cache.input.begin() + 2 * C * plane, plane, schedule_.sigma(t));
    std::fill_n(cache.input.begin() + (2 * C + 1) * plane, plane, position);

    auto weights = [&](const Layer& l) {
        return std::span<const double>(params_).subspan(l.weight_offset,
                                                        static_cast<std::size_t>(l.out_channels) * l.in_channels * 9);
    };
    auto bias = [&](const Layer& l) { return std::span<const double>(params_).subspan(l.bias_offset, l.out_channels); };

    const Layer& l_in = layers_[0];
    const Layer& l_cond = layers_[1];
    const Layer& l_mid = layers_[2];
    const Layer& l_out = layers_[3];

    cache.h1.resize(Hd * plane);
    conv_forward(cache.input, weights(l_in), bias(l_in), {2 * C + 2, Hd, H, W}, cache.h1);
    tanh_inplace(cache.h1);
    cache.h = cache.h1;

    if (gamma != 0.0) {
        auto cf = conditions.frame(frame);
        cache.cond.assign(cf.begin(), cf.end());
        cache.hc.resize(Hd * plane);
        conv_forward(cache.cond, weights(l_cond), bias(l_cond), {3, Hd, H, W}, cache.hc);
        tanh_inplace(cache.hc);
        cache.norms.resize(Hd);
        for (int c = 0; c < Hd; ++c) {
            const double* con = cache.hc.data() + c * plane;
            const double* base = cache.h1.data() + c * plane;
            ChannelNorm& n = cache.norms[c];
            n.con_mean = std::accumulate(con, con + plane, 0.0) / plane;
            n.base_mean = std::accumulate(base, base + plane, 0.0) / plane;
            double vc = 0.0, vb = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                vc += (con[i] - n.con_mean) * (con[i] - n.con_mean);
                vb += (base[i] - n.base_mean) * (base[i] - n.base_mean);
            }
            n.con_std = std::sqrt(vc / plane);
            n.base_std = std::sqrt(vb / plane);
            n.constant = n.con_std < kCrossNormEps;
            double* h = cache.h.data() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double aligned =
                    n.constant ? n.base_mean : (con[i] - n.con_mean) / n.con_std * n.base_std + n.base_mean;
                h[i] += gamma * aligned;
            }
        }
    }

    cache.h2.resize(Hd * plane);
    conv_forward(cache.h, weights(l_mid), bias(l_mid), {Hd, Hd, H, W}, cache.h2);
    tanh_inplace(cache.h2);
    conv_forward(cache.h2, weights(l_out), bias(l_out), {Hd, C, H, W}, v_out);
}

void ToyDenoiser::backward_frame(const FrameCache& cache, std::span<const double> grad_v, double gamma,
                                 std::vector<double>& gradient) const {
    const int C = arch_.channels, Hd = arch_.hidden;
    const int H = cache.height, W = cache.width;
    const std::size_t plane = static_cast<std::size_t>(H) * W;

    auto weights = [&](const Layer& l) {
        return std::span<const double>(params_).subspan(l.weight_offset,
                                                        static_cast<std::size_t>(l.out_channels) * l.in_channels * 9);
    };
    auto gw = [&](const Layer& l) {
        return std::span<double>(gradient).subspan(l.weight_offset,
                                                   static_cast<std::size_t>(l.out_channels) * l.in_channels * 9);
    };
    auto gb = [&](const Layer& l) { return std::span<double>(gradient).subspan(l.bias_offset, l.out_channels); };

    const Layer& l_in = layers_[0];
    const Layer& l_cond = layers_[1];
    const Layer& l_mid = layers_[2];
    const Layer& l_out = layers_[3];

    std::vector<double> grad_h2(Hd * plane, 0.0);
    conv_backward(cache.h2, weights(l_out), grad_v, {Hd, C, H, W}, gw(l_out), gb(l_out), grad_h2);
    for (std::size_t i = 0; i < grad_h2.size(); ++i) grad_h2[i] *= 1.0 - cache.h2[i] * cache.h2[i];

    std::vector<double> grad_h(Hd * plane, 0.0);
    conv_backward(cache.h, weights(l_mid), grad_h2, {Hd, Hd, H, W}, gw(l_mid), gb(l_mid), grad_h);

    std::vector<double> grad_h1 = grad_h;
    if (gamma != 0.0) {
        std::vector<double> grad_hc(Hd * plane, 0.0);
        for (int c = 0; c < Hd; ++c) {
            const ChannelNorm& n = cache.norms[c];
            const double* g = grad_h.data() + c * plane;
            const double* base = cache.h1.data() + c * plane;
            const double* con = cache.hc.data() + c * plane;
            double* gh1 = grad_h1.data() + c * plane;
            double sum_g = 0.0;
            for (std::size_t i = 0; i < plane; ++i) sum_g += gamma * g[i];
            if (n.constant) {
                for (std::size_t i = 0; i < plane; ++i) gh1[i] += sum_g / plane;
                continue;
            }
            // aligned = xhat·base_std + base_mean with xhat the standardised condition feature.
            double sum_g_xhat = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g_xhat += gamma * g[i] * (con[i] - n.con_mean) / n.con_std;
            }
            for (std::size_t i = 0; i < plane; ++i) {
                gh1[i] += sum_g / plane;
                if (n.base_std > 0.0) gh1[i] += sum_g_xhat * (base[i] - n.base_mean) / (plane * n.base_std);
            }
            double mean_gx = 0.0, mean_gx_x = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                const double gx = gamma * g[i] * n.base_std;
                const double xhat = (con[i] - n.con_mean) / n.con_std;
                mean_gx += gx;
                mean_gx_x += gx * xhat;
            }
            mean_gx /= plane;
            mean_gx_x /= plane;
            double* ghc = grad_hc.data() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double gx = gamma * g[i] * n.base_std;
                const double xhat = (con[i] - n.con_mean) / n.con_std;
                ghc[i] = (gx - mean_gx - xhat * mean_gx_x) / n.con_std;
                ghc[i] *= 1.0 - con[i] * con[i];
            }
        }
        conv_backward(cache.cond, weights(l_cond), grad_hc, {3, Hd, H, W}, gw(l_cond), gb(l_cond), {});
    }

    for (std::size_t i = 0; i < grad_h1.size(); ++i) grad_h1[i] *= 1.0 - cache.h1[i] * cache.h1[i];
    conv_backward(cache.input, weights(l_in), grad_h1, {2 * C + 2, Hd, H, W}, gw(l_in), gb(l_in), {});
}

Video ToyDenoiser::predict_v(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                             double gamma) const {
    check_inputs(z_t, endpoint, conditions, t, gamma);
    Video v(z_t.frames(), z_t.channels(), z_t.height(), z_t.width());
    FrameCache cache;
    for (int n = 0; n < z_t.frames(); ++n) forward_frame(z_t, endpoint, conditions, n, t, gamma, cache, v.frame(n));
    return v;
}

Video ToyDenoiser::predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                           double gamma) const {
    if (t >= 0 && t <= schedule_.steps() && schedule_.sigma(t) == 0.0) {
        check_inputs(z_t, endpoint, conditions, t, gamma);
        return z_t;
    }
    return v_to_x0(z_t, predict_v(z_t, endpoint, conditions, t, gamma), t, schedule_);
}

double ToyDenoiser::loss(const TrainingSample& s) const {
    const Video z_t = add_noise(s.clip, s.noise, s.t, schedule_);
    const Video target = v_target(s.clip, s.noise, s.t, schedule_);
    const Video v = predict_v(z_t, s.endpoint, s.conditions, s.t, s.gamma);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v.values()[i] - target.values()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(v.size());
}

double ToyDenoiser::loss_and_gradient(const TrainingSample& s, std::vector<double>& gradient) const {
    if (s.t < 1 || s.t > schedule_.steps()) throw DomainError("training time step must lie in [1, T]");
    const Video z_t = add_noise(s.clip, s.noise, s.t, schedule_);
    const Video target = v_target(s.clip, s.noise, s.t, schedule_);
    check_inputs(z_t, s.endpoint, s.conditions, s.t, s.gamma);

    gradient.assign(params_.size(), 0.0);
    const double count = static_cast<double>(z_t.size());
    const std::size_t fsize = z_t.frame_size();
    std::vector<double> v(fsize), grad_v(fsize);
    FrameCache cache;
    double acc = 0.0;
    for (int n = 0; n < z_t.frames(); ++n) {
        forward_frame(z_t, s.endpoint, s.conditions, n, s.t, s.gamma, cache, v);
        auto tgt = target.frame(n);
        for (std::size_t i = 0; i < fsize; ++i) {
            const double d = v[i] - tgt[i];
            acc += d * d;
            grad_v[i] = 2.0 * d / count;
        }
        backward_frame(cache, grad_v, s.gamma, gradient);
    }
    return acc / count;
}

void ToyDenoiser::save(const std::filesystem::path& path) const {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw ParseError(path.string() + ": cannot write weights");
    for (double p : params_) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(p));
        if constexpr (std::endian::native == std::endian::big) {
            bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
        }
        bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }

    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
        layers.push_back({{"name", l.name},
                          {"weight_shape", {l.out_channels, l.in_channels, kK, kK}},
                          {"weight_offset", l.weight_offset},
                          {"bias_shape", {l.out_channels}},
                          {"bias_offset", l.bias_offset}});
    }
    nlohmann::json sidecar = {{"format", kToyWeightsFormat},
                              {"dtype", "float32"},
                              {"endianness", "little"},
                              {"architecture", {{"channels", arch_.channels}, {"hidden", arch_.hidden}}},
                              {"schedule", schedule_.to_json()},
                              {"parameter_count", params_.size()},
                              {"layers", std::move(layers)}};
    std::ofstream js(path.string() + ".json");
    if (!js) throw ParseError(path.string() + ".json: cannot write weights sidecar");
    js << sidecar.dump(2) << '\n';
}

ToyDenoiser ToyDenoiser::load(const std::filesystem::path& path) {
    const std::string sidecar_path = path.string() + ".json";
    std::ifstream js(sidecar_path);
    if (!js) throw ParseError(sidecar_path + ": cannot open weights sidecar");
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(js);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(sidecar_path + ": invalid JSON: " + e.what());
    }
    if (sidecar.value("format", "") != kToyWeightsFormat) {
        throw ParseError(sidecar_path + ": unsupported format tag (expected \"" + kToyWeightsFormat + "\")");
    }
    try {
        ToyArchitecture arch{sidecar.at("architecture").at("channels").get<int>(),
                             sidecar.at("architecture").at("hidden").get<int>()};
        ToyDenoiser model(arch, NoiseSchedule::from_json(sidecar.at("schedule")), 0);
        if (sidecar.at("parameter_count").get<std::size_t>() != model.params_.size()) {
            throw ParseError(sidecar_path + ": parameter count does not match architecture");
        }
        std::ifstream bin(path, std::ios::binary);
        if (!bin) throw ParseError(path.string() + ": cannot open weights");
        for (double& p : model.params_) {
            std::uint32_t bits = 0;
            if (!bin.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
                throw ParseError(path.string() + ": truncated weights file");
            }
            if constexpr (std::endian::native == std::endian::big) {
                bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
            }
            p = static_cast<double>(std::bit_cast<float>(bits));
        }
        if (bin.peek() != std::char_traits<char>::eof()) throw ParseError(path.string() + ": trailing bytes");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(sidecar_path + ": " + e.what());
    } catch (const DomainError& e) {
        throw ParseError(sidecar_path + ": " + e.what());
    }
}

TrainReport toy_train(ToyDenoiser& model, std::span<const TrainingClip> dataset, const TrainConfig& config,
                      const std::function<void(int, double)>& on_epoch) {
    if (dataset.empty()) throw DomainError("toy_train: empty dataset");
    for (const auto& item : dataset) {
        if (!item.clip.same_shape(dataset[0].clip)) throw StructuralError("toy_train: clips differ in shape");
    }
    if (config.epochs < 0) throw DomainError("toy_train: epochs must be >= 0");

    Rng rng(config.seed);
    const int T = model.schedule().steps();
    TrainReport report;
    std::vector<double> gradient;
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const TrainingClip& item = dataset[idx];
            TrainingSample s;
            const bool flip = config.flip_augment && (rng.next_u64() & 1u);
            if (flip) {
                const int N = item.clip.frames();
                s.clip = Video(N, item.clip.channels(), item.clip.height(), item.clip.width());
                s.conditions = Video(N, item.conditions.channels(), item.conditions.height(), item.conditions.width());
                for (int n = 0; n < N; ++n) {
                    s.clip.set_frame(n, item.clip.frame_image(N - 1 - n));
                    s.conditions.set_frame(n, item.conditions.frame_image(N - 1 - n));
                }
                s.endpoint = s.clip.frame_image(0);
            } else {
                s.clip = item.clip;
                s.conditions = item.conditions;
                s.endpoint = item.endpoint;
            }
            s.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
            s.noise = Video(s.clip.frames(), s.clip.channels(), s.clip.height(), s.clip.width());
            for (double& e : s.noise.values()) e = rng.normal();
            s.gamma = 1.0;

            const double loss = model.loss_and_gradient(s, gradient);
            if (!std::isfinite(loss)) {
                throw NumericalError("toy_train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(report.step_losses.size()) + " (t=" + std::to_string(s.t) + ")");
            }
            auto params = model.parameters();
            for (std::size_t p = 0; p < params.size(); ++p) params[p] -= config.learning_rate * gradient[p];
            if (!std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); })) {
                throw NumericalError("toy_train: non-finite parameters after step " +
                                     std::to_string(report.step_losses.size()));
            }
            report.step_losses.push_back(loss);
            epoch_loss += loss;
        }
        epoch_loss /= static_cast<double>(dataset.size());
        report.epoch_losses.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    return report;
}

double evaluate_toy_loss(const ToyDenoiser& model, std::span<const TrainingClip> dataset, std::uint64_t seed,
                         int draws_per_clip) {
    if (dataset.empty()) throw DomainError("evaluate_toy_loss: empty dataset");
    Rng rng(seed);
    const int T = model.schedule().steps();
    double total = 0.0;
    int count = 0;
    for (const auto& item : dataset) {
        for (int d = 0; d < draws_per_clip; ++d) {
            TrainingSample s{item.clip, item.endpoint, item.conditions, 1, {}, 1.0};
            s.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
            s.noise = Video(s.clip.frames(), s.clip.channels(), s.clip.height(), s.clip.width());
            for (double& e : s.noise.values()) e = rng.normal();
            total += model.loss(s);
            ++count;
        }
    }
    return total / count;
}

} // namespace fcvg
