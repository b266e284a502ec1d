// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "fcvg/denoiser.hpp"
#include "fcvg/metrics.hpp"
#include "fcvg/sampler.hpp"
#include "fcvg/synthetic.hpp"
#include "fcvg/toy_denoiser.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fcvg;
using testing::random_image;
using testing::random_video;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::vector<EasingCurve> all_curves() {
    return {EasingCurve(EasingKind::linear), EasingCurve(EasingKind::ease_in), EasingCurve(EasingKind::ease_out),
            EasingCurve::piecewise({{0.0, 0.0}, {0.25, 0.05}, {0.6, 0.7}, {1.0, 1.0}})};
}

ConditionPair random_geometry(Rng& rng, Canvas canvas, bool pose) {
    auto pt = [&] { return Point2{rng.uniform(-5.0, canvas.width + 5.0), rng.uniform(-5.0, canvas.height + 5.0)}; };
    std::vector<LineMatch> matches;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) matches.push_back({i * 7, make_segment(pt(), pt()), make_segment(pt(), pt())});
    std::optional<PoseSkeleton> ps, pe;
    if (pose) {
        PoseSkeleton s, e;
        for (int k = 0; k < 6; ++k) {
            s.keypoints.push_back({"kp" + std::to_string(k), pt(), rng.uniform() > 0.15});
            e.keypoints.push_back({"kp" + std::to_string(k), pt(), rng.uniform() > 0.15});
        }
        s.edges = e.edges = {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}};
        ps = s;
        pe = e;
    }
    return make_condition_pair(canvas, matches, ps, pe);
}

ConditionPair random_lines(Rng& rng, int w, int h) {
    auto pt = [&] { return Point2{rng.uniform(0, w), rng.uniform(0, h)}; };
    return make_condition_pair({w, h}, {{0, make_segment(pt(), pt()), make_segment(pt(), pt())},
                                        {1, make_segment(pt(), pt()), make_segment(pt(), pt())}});
}

Outcome c1_fusion_weights() {
    const auto w = fusion_weights(25);
    const bool ok = std::abs(w[0] - 1.0) <= 1e-12 && std::abs(w[12] - 0.5) <= 1e-12 && std::abs(w[24]) <= 1e-12;
    char buf[128];
    std::snprintf(buf, sizeof buf, "lambda_1=%.15g lambda_13=%.15g lambda_25=%.15g", w[0], w[12], w[24]);
    return {ok, buf};
}

Outcome c2_endpoint_exactness() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    int checked = 0, bad = 0;
    for (int g = 0; g < 50; ++g) {
        const Canvas canvas{16 + static_cast<int>(rng.below(48)), 16 + static_cast<int>(rng.below(48))};
        const auto pair = random_geometry(rng, canvas, g % 2 == 1);
        const int N = 2 + static_cast<int>(rng.below(29));
        const std::uint64_t palette = rng.next_u64();
        const auto first = rasterize(pair.start, palette), last = rasterize(pair.end, palette);
        for (const auto& curve : all_curves()) {
            const auto seq = build_condition_sequences(pair.start, pair.end, N, curve);
            bad += !(rasterize(seq.forward.front(), palette) == first);
            bad += !(rasterize(seq.forward.back(), palette) == last);
            checked += 2;
        }
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 10.0,
            std::to_string(checked) + " endpoint rasters, " + std::to_string(bad) + " mismatches, " +
                std::to_string(secs).substr(0, 5) + " s"};
}

Outcome c3_flip_consistency() {
    Rng rng(33);
    int bad = 0;
    for (int g = 0; g < 20; ++g) {
        const auto pair = random_geometry(rng, {32, 24}, g % 2 == 0);
        for (const auto& curve : all_curves()) {
            const int N = 2 + static_cast<int>(rng.below(20));
            const auto seq = build_condition_sequences(pair.start, pair.end, N, curve);
            const std::vector<ConditionGeometry> rev(seq.forward.rbegin(), seq.forward.rend());
            bad += !(seq.backward == rev);
            const auto fr = rasterize_all(seq.forward, 5), br = rasterize_all(seq.backward, 5);
            for (int i = 0; i < N; ++i) bad += !(br[i] == fr[N - 1 - i]);
        }
    }
    int flips_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(12));
        const Video z = random_video(rng, n, 1 + static_cast<int>(rng.below(4)), 3, 5);
        flips_bad += !(flip_time(flip_time(z)) == z);
    }
    return {bad == 0 && flips_bad == 0, "sequence mismatches " + std::to_string(bad) + ", involution failures " +
                                            std::to_string(flips_bad) + "/100"};
}

Outcome c4_affine_oracle() {
    const int N = 5, C = 1, H = 4, W = 4, T = 10;
    double worst = 0.0, slowest = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto t0 = Clock::now();
        Rng rng(4000 + seed);
        const Image start = random_image(rng, C, H, W), end = random_image(rng, C, H, W);
        const auto pair = random_lines(rng, W, H);
        oracle::AnalyticPrior prior;
        prior.mu = random_video(rng, N, C, H, W, 0.3);
        prior.sigma2 = Video(N, C, H, W);
        for (double& v : prior.sigma2.values()) v = rng.uniform(0.05, 0.8);
        prior.cond_gain = rng.uniform(0.2, 1.5);
        prior.anchor = seed % 2 == 0;
        const auto sched = make_schedule(T, seed % 3 == 0 ? ScheduleKind::vp_linear : ScheduleKind::vp_cosine);
        const AnalyticGaussianDenoiser d(sched, prior.mu, prior.sigma2, prior.cond_gain, prior.anchor);
        SamplerConfig cfg;
        cfg.steps = T;
        cfg.frames = N;
        cfg.seed = seed;
        cfg.gamma = rng.uniform(0.0, 2.0);
        cfg.palette_seed = seed;
        const auto res = sample(start, end, pair.start, pair.end, EasingCurve(EasingKind::ease_in), d, cfg);
        const auto expect = oracle::affine_sample(prior, sched, start, end, res.forward_conditions, cfg.gamma,
                                                  oracle::to_eigen(draw_initial_noise(seed, N, C, H, W)));
        worst = std::max(worst, (oracle::to_eigen(res.video) - expect).norm() / expect.norm());
        slowest = std::max(slowest, seconds_since(t0));
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max relative error %.3e over 20 seeds, slowest seed %.3f s", worst, slowest);
    return {worst <= 1e-6 && slowest < 1.0, buf};
}

Outcome c5_equivariance() {
    const int N = 7, C = 3, H = 12, W = 12, T = 10;
    const auto sched = make_schedule(T, ScheduleKind::vp_cosine);
    double worst_analytic = 0.0, worst_toy = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(5000 + seed);
        const Image start = random_image(rng, C, H, W), end = random_image(rng, C, H, W);
        const auto pair = random_lines(rng, W, H);
        Video s2(N, C, H, W);
        for (double& v : s2.values()) v = rng.uniform(0.1, 0.5);
        for (double& v : s2.frame(0)) v = 1e-6;
        const AnalyticGaussianDenoiser analytic(sched, random_video(rng, N, C, H, W, 0.2), s2, 1.0, true);
        const ToyDenoiser toy({3, 16}, sched, seed);
        const EasingCurve curve = all_curves()[seed % 4];
        SamplerConfig cfg;
        cfg.steps = T;
        cfg.frames = N;
        cfg.palette_seed = seed;
        const Video noise = draw_initial_noise(seed, N, C, H, W);
        const Video flipped = flip_time(noise);
        for (const Denoiser* d : {static_cast<const Denoiser*>(&analytic), static_cast<const Denoiser*>(&toy)}) {
            const auto a = sample(start, end, pair.start, pair.end, curve, *d, cfg, {}, &noise);
            const auto b = sample(end, start, pair.end, pair.start, curve.reversed(), *d, cfg, {}, &flipped);
            const double diff = max_abs_diff(flip_time(a.video).values(), b.video.values());
            double& worst = d == &toy ? worst_toy : worst_analytic;
            worst = std::max(worst, diff);
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max abs diff analytic %.3e, toy %.3e over 10 seeds", worst_analytic, worst_toy);
    return {worst_analytic <= 1e-6 && worst_toy <= 1e-6, buf};
}

Outcome c6_round_trips() {
    Rng rng(66);
    double worst_rt = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto sched = make_schedule(kDefaultSteps, trial % 2 ? ScheduleKind::vp_linear : ScheduleKind::vp_cosine);
        const Video z = random_video(rng, 3, 2, 4, 4), eps = random_video(rng, 3, 2, 4, 4);
        for (int t = 0; t <= sched.steps(); ++t) {
            const Video back = v_to_x0(add_noise(z, eps, t, sched), v_target(z, eps, t, sched), t, sched);
            worst_rt = std::max(worst_rt, max_abs_diff(back.values(), z.values()));
        }
    }
    double worst_stats = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Image con = random_image(rng, 4, 8, 8, -2.0, 6.0), base = random_image(rng, 4, 8, 8, -0.3, 0.4);
        const Image out = cross_normalize(con, base);
        for (int c = 0; c < 4; ++c) {
            // Population statistics recomputed here.
            auto stats = [&](const Image& img) {
                double m = 0, v = 0;
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) m += img.at(c, y, x);
                m /= 64;
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) v += (img.at(c, y, x) - m) * (img.at(c, y, x) - m);
                return std::pair{m, std::sqrt(v / 64)};
            };
            const auto [mo, so] = stats(out);
            const auto [mb, sb] = stats(base);
            worst_stats = std::max({worst_stats, std::abs(mo - mb), std::abs(so - sb)});
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "round-trip max error %.3e (all t, 100 tensors), cross-normalize stats error %.3e",
                  worst_rt, worst_stats);
    return {worst_rt <= 1e-9 && worst_stats <= 1e-6, buf};
}

Outcome c7_ablation() {
    const auto t0 = Clock::now();
    SyntheticSpec base;
    base.seed = 1000;
    base.frames = 9;
    base.magnitude = 10.0;
    const auto data = synthetic_training_set(base, 20);
    ToyDenoiser model({3, 16}, make_schedule(10, ScheduleKind::vp_cosine), 7);
    const double before = evaluate_toy_loss(model, data, 99);
    TrainConfig tc;
    tc.epochs = 30;
    tc.learning_rate = 0.1;
    tc.seed = 3;
    toy_train(model, data, tc);
    const double after = evaluate_toy_loss(model, data, 99);
    model.set_schedule(make_schedule(kDefaultSteps, ScheduleKind::vp_cosine));

    int wins = 0;
    double sum1 = 0.0, sum0 = 0.0;
    for (int k = 0; k < 20; ++k) {
        SyntheticSpec s = base;
        s.seed = 5000 + k;
        const auto clip = synth_clip(s);
        const Image a = clip.clip.frame_image(0), b = clip.clip.frame_image(s.frames - 1);
        SamplerConfig cfg;
        cfg.frames = s.frames;
        cfg.seed = k;
        cfg.palette_seed = s.seed;
        cfg.gamma = 1.0;
        const auto with = compute_metrics(sample(a, b, clip.start(), clip.end(), EasingCurve(), model, cfg).video, a, b);
        cfg.gamma = 0.0;
        const auto without =
            compute_metrics(sample(a, b, clip.start(), clip.end(), EasingCurve(), model, cfg).video, a, b);
        wins += with.trajectory_deviation < without.trajectory_deviation;
        sum1 += with.trajectory_deviation;
        sum0 += without.trajectory_deviation;
    }
    const double secs = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "gamma=1 lower in %d/20 cases (mean deviation %.3f vs %.3f px), loss %.4f -> %.4f, %.1f s", wins,
                  sum1 / 20, sum0 / 20, before, after, secs);
    return {wins >= 18 && secs < 300.0, buf};
}

Outcome c8_budget() {
    Rng rng(88);
    const int N = 5, C = 3, H = 8, W = 8;
    const Image start = random_image(rng, C, H, W), end = random_image(rng, C, H, W);
    const auto pair = random_lines(rng, W, H);
    const SamplerConfig defaults;
    const auto sched = make_schedule(defaults.steps, defaults.schedule);
    const AnalyticGaussianDenoiser inner(sched, Video(N, C, H, W), Video(N, C, H, W, 0.25), 1.0, false);
    const CountingDenoiser counter(inner);
    SamplerConfig cfg;
    cfg.frames = N;
    const auto res = sample(start, end, pair.start, pair.end, EasingCurve(), counter, cfg);
    // With the initial noise supplied, the seed cannot matter unless the loop draws more noise.
    const Video noise = draw_initial_noise(1, N, C, H, W);
    cfg.seed = 123;
    const auto r1 = sample(start, end, pair.start, pair.end, EasingCurve(), inner, cfg, {}, &noise);
    cfg.seed = 456;
    const auto r2 = sample(start, end, pair.start, pair.end, EasingCurve(), inner, cfg, {}, &noise);
    const bool ok = defaults.steps == 25 && counter.calls() == 2 * defaults.steps && res.stats.noise_draws == 1 &&
                    r1.video == r2.video && r2.stats.noise_draws == 0;
    return {ok, "T=" + std::to_string(defaults.steps) + ", denoiser calls " + std::to_string(counter.calls()) +
                    ", noise draws " + std::to_string(res.stats.noise_draws) + ", seed-independent given z_T: " +
                    (r1.video == r2.video ? "yes" : "no")};
}

Outcome c9_endpoint_fidelity() {
    const int N = 5, C = 3, H = 8, W = 8, T = 10;
    const auto sched = make_schedule(T, ScheduleKind::vp_cosine);
    double min_psnr = INFINITY, max_gap = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(9000 + seed);
        const Image start = random_image(rng, C, H, W), end = random_image(rng, C, H, W);
        const auto pair = random_lines(rng, W, H);
        oracle::AnalyticPrior prior;
        prior.mu = Video(N, C, H, W, 0.0);
        prior.sigma2 = Video(N, C, H, W, 0.25);
        for (double& v : prior.sigma2.frame(0)) v = 1e-6;
        prior.cond_gain = 1.0;
        prior.anchor = true;
        const AnalyticGaussianDenoiser d(sched, prior.mu, prior.sigma2, 1.0, true);
        SamplerConfig cfg;
        cfg.steps = T;
        cfg.frames = N;
        cfg.seed = seed;
        const auto res = sample(start, end, pair.start, pair.end, EasingCurve(), d, cfg);
        const auto m = compute_metrics(res.video, start, end);
        // The oracle run fixes what the sampler must reproduce.
        const auto expect = oracle::affine_sample(prior, sched, start, end, res.forward_conditions, cfg.gamma,
                                                  oracle::to_eigen(draw_initial_noise(seed, N, C, H, W)));
        Video oracle_video(N, C, H, W);
        for (std::size_t i = 0; i < oracle_video.size(); ++i) oracle_video.values()[i] = expect(static_cast<Eigen::Index>(i));
        const auto mo = compute_metrics(oracle_video, start, end);
        min_psnr = std::min({min_psnr, m.psnr_start, m.psnr_end});
        max_gap = std::max({max_gap, std::abs(m.psnr_start - mo.psnr_start), std::abs(m.psnr_end - mo.psnr_end)});
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "min endpoint PSNR %.2f dB over 10 seeds (oracle gap %.2e dB)", min_psnr, max_gap);
    return {min_psnr >= 40.0 && max_gap <= 1e-3, buf};
}

Outcome c10_gradient() {
    Rng rng(1010);
    ToyDenoiser toy({3, 16}, make_schedule(10, ScheduleKind::vp_cosine), 10);
    SyntheticSpec spec;
    spec.frames = 3;
    spec.canvas = {12, 12};
    spec.seed = 10;
    const auto clip = make_training_clip(synth_clip(spec), 10);
    TrainingSample s;
    s.clip = clip.clip;
    s.endpoint = clip.endpoint;
    s.conditions = clip.conditions;
    s.t = 5;
    s.noise = random_video(rng, 3, 3, 12, 12);
    std::vector<double> grad;
    toy.loss_and_gradient(s, grad);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const std::size_t i = rng.below(toy.parameter_count());
        const double orig = toy.parameters()[i], h = 1e-5;
        toy.parameters()[i] = orig + h;
        const double lp = toy.loss(s);
        toy.parameters()[i] = orig - h;
        const double lm = toy.loss(s);
        toy.parameters()[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-8));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max relative error %.3e at 10 random parameters", worst);
    return {worst <= 1e-4, buf};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"fusion-weight exactness", c1_fusion_weights},
        {"condition endpoint exactness", c2_endpoint_exactness},
        {"flip/backward consistency", c3_flip_consistency},
        {"linear-Gaussian oracle equivalence", c4_affine_oracle},
        {"time-reversal equivariance", c5_equivariance},
        {"algebraic round-trips", c6_round_trips},
        {"ablation direction", c7_ablation},
        {"budget conformance", c8_budget},
        {"endpoint fidelity", c9_endpoint_fidelity},
        {"gradient check", c10_gradient},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
