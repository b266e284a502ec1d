#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "fcvg/error.hpp"
#include "fcvg/sampler.hpp"
#include "fcvg/synthetic.hpp"
#include "fcvg/toy_denoiser.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fcvg;
using testing::random_image;
using testing::random_video;

namespace {

struct Scene {
    Image start, end;
    ConditionPair pair;
};

Scene random_scene(Rng& rng, int c, int h, int w) {
    Scene s;
    s.start = random_image(rng, c, h, w);
    s.end = random_image(rng, c, h, w);
    auto pt = [&] { return Point2{rng.uniform(0, w), rng.uniform(0, h)}; };
    std::vector<LineMatch> m;
    for (int i = 0; i < 2; ++i) m.push_back({i, make_segment(pt(), pt()), make_segment(pt(), pt())});
    s.pair = make_condition_pair({w, h}, m);
    return s;
}

oracle::AnalyticPrior random_prior(Rng& rng, int n, int c, int h, int w, bool anchor) {
    oracle::AnalyticPrior p;
    p.mu = random_video(rng, n, c, h, w, 0.2);
    p.sigma2 = Video(n, c, h, w);
    for (double& v : p.sigma2.values()) v = rng.uniform(0.05, 0.5);
    if (anchor)
        for (double& v : p.sigma2.frame(0)) v = 1e-4;
    p.cond_gain = 0.8;
    p.anchor = anchor;
    return p;
}

// Adds a large offset to one frame of one direction's estimate.
class PerturbingDenoiser final : public Denoiser {
public:
    PerturbingDenoiser(const Denoiser& inner, const Image& target_endpoint, int frame)
        : inner_(inner), target_(target_endpoint), frame_(frame) {}
    Video predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                  double gamma) const override {
        Video out = inner_.predict(z_t, endpoint, conditions, t, gamma);
        if (endpoint == target_)
            for (double& v : out.frame(frame_)) v += 123.0;
        return out;
    }
    const NoiseSchedule& schedule() const override { return inner_.schedule(); }
    std::string id() const override { return "perturbed"; }

private:
    const Denoiser& inner_;
    Image target_;
    int frame_;
};

class NanDenoiser final : public Denoiser {
public:
    explicit NanDenoiser(NoiseSchedule s) : s_(std::move(s)) {}
    Video predict(const Video& z_t, const Image&, const Video&, int t, double) const override {
        Video out = z_t;
        if (t == 2) out.values()[0] = std::nan("");
        return out;
    }
    const NoiseSchedule& schedule() const override { return s_; }
    std::string id() const override { return "nan"; }

private:
    NoiseSchedule s_;
};

} // namespace

TEST_CASE("fusion weights") {
    const auto w = fusion_weights(25);
    REQUIRE(w.size() == 25);
    CHECK(w[0] == 1.0);
    CHECK(std::abs(w[12] - 0.5) <= 1e-12);
    CHECK(w[24] == 0.0);
    for (int i = 1; i < 25; ++i) {
        CHECK(w[i] < w[i - 1]);
        CHECK(std::abs((w[i - 1] - w[i]) - 1.0 / 24.0) <= 1e-12);
    }
    CHECK(fusion_weights(2) == std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(fusion_weights(1), DomainError);
}

TEST_CASE("flip_time") {
    Rng rng(1);
    const Video z = random_video(rng, 3, 2, 2, 2);
    const Video f = flip_time(z);
    for (int n = 0; n < 3; ++n) CHECK(f.frame_image(n) == z.frame_image(2 - n));
    CHECK(flip_time(f) == z);
    const Video same(4, 1, 2, 2, 0.7);
    CHECK(flip_time(same) == same);
}

TEST_CASE("fuse") {
    Rng rng(2);
    const Video a = random_video(rng, 4, 2, 3, 3), b = random_video(rng, 4, 2, 3, 3);
    CHECK(fuse(a, b, std::vector<double>(4, 1.0)) == a);
    const Video half = fuse(a, b, std::vector<double>(4, 0.5));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(half.values()[i] == doctest::Approx(0.5 * (a.values()[i] + b.values()[i])));
    const Video d = fuse(a, b, fusion_weights(4));
    CHECK(max_abs_diff(d.frame(0), a.frame(0)) == 0.0);
    CHECK(max_abs_diff(d.frame(3), b.frame(3)) == 0.0);
    CHECK_THROWS_AS(fuse(a, b, std::vector<double>(3, 1.0)), StructuralError);
    CHECK_THROWS_AS(fuse(a, Video(3, 2, 3, 3), fusion_weights(4)), StructuralError);
}

TEST_CASE("sampler config JSON") {
    SamplerConfig c;
    CHECK(c.steps == 25);
    CHECK(c.gamma == 1.0);
    c.seed = 9;
    c.lambda = fusion_weights(c.frames);
    const SamplerConfig back = sampler_config_from_json(to_json(c));
    CHECK(back.seed == 9);
    CHECK(back.lambda == c.lambda);
    CHECK_THROWS_AS(sampler_config_from_json({{"stpes", 3}}), DomainError);
    CHECK_THROWS_AS(sampler_config_from_json({{"frames", 1}}), DomainError);
    CHECK_THROWS_AS(sampler_config_from_json({{"lambda", {1.0, 0.0}}}), DomainError);
}

TEST_CASE("FCVG_THREADS") {
    ::setenv("FCVG_THREADS", "3", 1);
    CHECK(threads_from_env() == 3);
    ::setenv("FCVG_THREADS", "0", 1);
    CHECK(threads_from_env() == 1);
    ::unsetenv("FCVG_THREADS");
    CHECK(threads_from_env() == 1);
}

TEST_CASE("sampler matches the composed affine map") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(seed);
        const int N = 5, C = 1, H = 4, W = 4, T = 10;
        const Scene sc = random_scene(rng, C, H, W);
        const auto prior = random_prior(rng, N, C, H, W, seed % 2 == 0);
        const auto sched = make_schedule(T, ScheduleKind::vp_cosine);
        const AnalyticGaussianDenoiser d(sched, prior.mu, prior.sigma2, prior.cond_gain, prior.anchor);
        SamplerConfig cfg;
        cfg.steps = T;
        cfg.frames = N;
        cfg.seed = seed;
        cfg.palette_seed = seed + 1;
        const auto res = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), d, cfg);
        const Video zT = draw_initial_noise(seed, N, C, H, W);
        const Eigen::VectorXd expect = oracle::affine_sample(prior, sched, sc.start, sc.end, res.forward_conditions,
                                                             cfg.gamma, oracle::to_eigen(zT));
        const double rel = (oracle::to_eigen(res.video) - expect).norm() / expect.norm();
        CHECK(rel <= 1e-6);
    }
}

TEST_CASE("endpoint frames depend only on their own direction") {
    Rng rng(5);
    const Scene sc = random_scene(rng, 3, 6, 6);
    const auto prior = random_prior(rng, 6, 3, 6, 6, true);
    const auto sched = make_schedule(8, ScheduleKind::vp_linear);
    const AnalyticGaussianDenoiser d(sched, prior.mu, prior.sigma2, prior.cond_gain, true);
    SamplerConfig cfg;
    cfg.steps = 8;
    cfg.frames = 6;
    const auto base = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), d, cfg);
    // Backward estimate of frame 0 sits at index N-1 of its flipped clip; forward estimate of frame N-1 at N-1.
    const PerturbingDenoiser bwd(d, sc.end, 5), fwd(d, sc.start, 5);
    const auto pb = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), bwd, cfg);
    const auto pf = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), fwd, cfg);
    CHECK(max_abs_diff(pb.video.frame(0), base.video.frame(0)) == 0.0);
    CHECK(max_abs_diff(pf.video.frame(5), base.video.frame(5)) == 0.0);
    // The same perturbation at an interior frame does show up.
    const PerturbingDenoiser interior(d, sc.start, 2);
    const auto pi = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), interior, cfg);
    CHECK(max_abs_diff(pi.video.frame(2), base.video.frame(2)) > 1.0);
}

TEST_CASE("determinism across thread counts and budget") {
    Rng rng(6);
    const Scene sc = random_scene(rng, 3, 8, 8);
    const auto sched = make_schedule(6, ScheduleKind::vp_cosine);
    const ToyDenoiser toy({3, 6}, sched, 2);
    SamplerConfig cfg;
    cfg.steps = 6;
    cfg.frames = 4;
    cfg.seed = 44;
    const auto a = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(EasingKind::ease_in), toy, cfg);
    cfg.threads = 2;
    const auto b = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(EasingKind::ease_in), toy, cfg);
    CHECK(a.video == b.video);
    CHECK(a.stats.denoiser_calls == 12);
    CHECK(a.stats.noise_draws == 1);
    const CountingDenoiser counter(toy);
    sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), counter, cfg);
    CHECK(counter.calls() == 12);
}

TEST_CASE("gamma = 0 equals all-black conditions") {
    Rng rng(7);
    const Scene sc = random_scene(rng, 3, 8, 8);
    ConditionPair blank = make_condition_pair({8, 8}, {});
    const auto sched = make_schedule(5, ScheduleKind::vp_cosine);
    const auto prior = random_prior(rng, 5, 3, 8, 8, true);
    const AnalyticGaussianDenoiser analytic(sched, prior.mu, prior.sigma2, 1.0, true);
    const ToyDenoiser toy({3, 6}, sched, 4);
    SamplerConfig cfg;
    cfg.steps = 5;
    cfg.frames = 5;
    const Denoiser* ds[] = {&analytic, &toy};
    for (const Denoiser* d : ds) {
        cfg.gamma = 0.0;
        const auto real = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), *d, cfg);
        const auto black = sample(sc.start, sc.end, blank.start, blank.end, EasingCurve(), *d, cfg);
        CHECK(max_abs_diff(real.video.values(), black.video.values()) <= 1e-9);
    }
    // For the analytic denoiser black rasters contribute nothing even at gamma = 1.
    cfg.gamma = 0.0;
    const auto g0 = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), analytic, cfg);
    cfg.gamma = 1.0;
    const auto g1_black = sample(sc.start, sc.end, blank.start, blank.end, EasingCurve(), analytic, cfg);
    CHECK(max_abs_diff(g0.video.values(), g1_black.video.values()) <= 1e-9);
}

TEST_CASE("time-reversal equivariance") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(100 + seed);
        const int N = 6, C = 3, H = 8, W = 8, T = 6;
        const Scene sc = random_scene(rng, C, H, W);
        const auto sched = make_schedule(T, ScheduleKind::vp_cosine);
        const auto prior = random_prior(rng, N, C, H, W, true);
        const AnalyticGaussianDenoiser analytic(sched, prior.mu, prior.sigma2, 0.8, true);
        const ToyDenoiser toy({3, 6}, sched, seed);
        const Denoiser* ds[] = {&analytic, &toy};
        const EasingCurve curve(EasingKind::ease_out);
        SamplerConfig cfg;
        cfg.steps = T;
        cfg.frames = N;
        const Video noise = draw_initial_noise(seed, N, C, H, W);
        const Video flipped = flip_time(noise);
        for (const Denoiser* d : ds) {
            const auto a = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, curve, *d, cfg, {}, &noise);
            const auto b = sample(sc.end, sc.start, sc.pair.end, sc.pair.start, curve.reversed(), *d, cfg, {}, &flipped);
            CHECK(max_abs_diff(flip_time(a.video).values(), b.video.values()) <= 1e-6);
            CHECK(a.stats.noise_draws == 0);
        }
    }
}

TEST_CASE("sampler errors") {
    Rng rng(8);
    const Scene sc = random_scene(rng, 3, 8, 8);
    const auto sched = make_schedule(4, ScheduleKind::vp_cosine);
    const ToyDenoiser toy({3, 4}, sched, 1);
    SamplerConfig cfg;
    cfg.steps = 4;
    cfg.frames = 3;
    CHECK_THROWS_AS(sample(sc.start, Image(3, 7, 8), sc.pair.start, sc.pair.end, EasingCurve(), toy, cfg), StructuralError);
    cfg.steps = 5;
    CHECK_THROWS_AS(sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), toy, cfg), StructuralError);
    cfg.steps = 4;
    const auto other = make_condition_pair({9, 8}, {});
    CHECK_THROWS_AS(sample(sc.start, sc.end, other.start, other.end, EasingCurve(), toy, cfg), StructuralError);
    cfg.lambda = std::vector<double>{1.0, 0.0};
    CHECK_THROWS_AS(sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), toy, cfg), StructuralError);
    cfg.lambda.reset();

    const NanDenoiser nan(sched);
    try {
        sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), nan, cfg);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("t=2") != std::string::npos);
    }
}

TEST_CASE("lambda override is honoured") {
    Rng rng(9);
    const Scene sc = random_scene(rng, 3, 6, 6);
    const auto sched = make_schedule(4, ScheduleKind::vp_cosine);
    const auto prior = random_prior(rng, 3, 3, 6, 6, false);
    const AnalyticGaussianDenoiser d(sched, prior.mu, prior.sigma2, 1.0);
    SamplerConfig cfg;
    cfg.steps = 4;
    cfg.frames = 3;
    cfg.lambda = std::vector<double>{1.0, 1.0, 1.0};
    const auto only_fwd = sample(sc.start, sc.end, sc.pair.start, sc.pair.end, EasingCurve(), d, cfg);
    CHECK(only_fwd.lambda == *cfg.lambda);
    // With all weight on the forward path the result is plain forward DDIM.
    const Video zT = draw_initial_noise(cfg.seed, 3, 3, 6, 6);
    Video z = zT;
    const Video cf = conditions_to_video(only_fwd.forward_conditions);
    for (int t = 4; t >= 1; --t) z = ddim_step(z, d.predict(z, sc.start, cf, t, 1.0), t, sched);
    CHECK(max_abs_diff(z.values(), only_fwd.video.values()) <= 1e-12);
}
