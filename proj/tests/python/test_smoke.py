import math

import numpy as np
import pytest

import fcvg


def test_easing_and_weights():
    assert fcvg.eval_easing("linear", 0.5) == 0.5
    assert fcvg.eval_easing("ease_in", 0.5) == 0.25
    assert fcvg.eval_easing("piecewise", 0.5, [(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)]) == pytest.approx(0.2)
    w = fcvg.fusion_weights(25)
    assert w[0] == 1.0 and abs(w[12] - 0.5) < 1e-12 and w[24] == 0.0
    with pytest.raises(fcvg.DomainError):
        fcvg.eval_easing("linear", 1.5)


def test_schedule_round_trip():
    rng = np.random.default_rng(0)
    sched = fcvg.NoiseSchedule(10, "vp_linear")
    assert sched.steps == 10
    assert sched.alphas[0] == 1.0 and sched.sigmas[0] == 0.0
    z = rng.normal(size=(3, 2, 4, 4))
    eps = rng.normal(size=z.shape)
    for t in range(11):
        back = sched.v_to_x0(sched.add_noise(z, eps, t), sched.v_target(z, eps, t), t)
        assert np.max(np.abs(back - z)) < 1e-9


def test_flip_and_cross_normalize():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(4, 1, 2, 3))
    assert np.array_equal(fcvg.flip_time(z), z[::-1])
    con = rng.normal(size=(2, 5, 5)) * 3 + 1
    base = rng.normal(size=(2, 5, 5)) * 0.2
    out = fcvg.cross_normalize(con, base)
    assert np.allclose(out.mean(axis=(1, 2)), base.mean(axis=(1, 2)), atol=1e-6)
    assert np.allclose(out.std(axis=(1, 2)), base.std(axis=(1, 2)), atol=1e-6)


def test_sample_pipeline(tmp_path):
    match = str(tmp_path / "matches.json")
    clip = fcvg.synth_clip(canvas=16, frames=5, magnitude=4.0, seed=3, match_path=match)
    assert clip.shape == (5, 3, 16, 16)
    conds = fcvg.rasterize_conditions(match, frames=5)
    assert conds.shape == (5, 16, 16, 3) and conds.dtype == np.uint8

    res = fcvg.sample(clip[0], clip[-1], match, frames=5, steps=10, seed=1)
    assert res["denoiser_calls"] == 20
    video = res["video"]
    assert video.shape == clip.shape
    again = fcvg.sample(clip[0], clip[-1], match, frames=5, steps=10, seed=1)["video"]
    assert np.array_equal(video, again)

    m = fcvg.compute_metrics(video, clip[0], clip[-1], clip)
    assert m["psnr_start"] >= 40.0 and m["psnr_end"] >= 40.0
    assert m["ground_truth_mse"] is not None
    still = fcvg.compute_metrics(np.repeat(clip[:1], 3, axis=0), clip[0], clip[0])
    assert still["smoothness"] == 0.0 and math.isinf(still["psnr_start"])


def test_errors_are_python_exceptions(tmp_path):
    with pytest.raises(fcvg.ParseError):
        fcvg.rasterize_conditions(str(tmp_path / "missing.json"), frames=3)
    with pytest.raises(fcvg.StructuralError):
        fcvg.flip_time(np.zeros((2, 2)))
