"""Acceptance criteria, one test per criterion, at the stated tolerances."""
import math
import os
import time

import numpy as np
import pytest
from skimage import data, transform

from vafr import acuity, baselines, foveate, lpbuffer, mapping, presets, raycast
from vafr.baselines import BaselineParams
from vafr.foveate import FoveationParams
from vafr.mapping import ConstantDelta, MappingContext

import oracles

THREADS = os.cpu_count() or 1

# symbolic-oracle value of the one-sided limit gap at 4.89 deg, 1440x1700, delta 1.8,
# alpha 0.85, beta 0.7, a 0.85; the oracle only finds a complex value here
LAFR_GAP = 1.2134323255183963 - 28.158504247285606j


def crit(n, title):
    return pytest.mark.criterion(n, title)


@crit(1, "shading rate equals acuity; du/de = 2f")
def test_shading_rate_identity():
    t0 = time.perf_counter()
    model = acuity.default_model()
    ctx = MappingContext(model)
    e = np.random.default_rng(1).uniform(0.0, 60.0, 10_000)
    assert np.array_equal(acuity.shading_rate(model, e), acuity.acuity(model, e))
    h = 1e-6
    lo = np.maximum(e - h, 0.0)
    hi = np.minimum(e + h, np.nextafter(60.0, 0.0))
    du = (mapping.u_of_e(ctx, hi) - mapping.u_of_e(ctx, lo)) / (hi - lo)
    np.testing.assert_allclose(du, 2.0 * acuity.acuity(model, e), rtol=1e-6)
    assert time.perf_counter() - t0 < 1.0


@crit(2, "buffer dims and valid_count constant across displays and gazes")
def test_constant_buffer():
    t0 = time.perf_counter()
    seen = set()
    for name in ("2K", "4K", "8K", "retinal"):
        W, H = presets.RESOLUTIONS[name]
        for gaze in ((W / 2, H / 2), (0, 0), (W, 0), (0, H), (W, H)):
            ctx = MappingContext(c_r=1.0 / H, display_w=W, display_h=H, gaze=gaze)
            dims = mapping.derive_buffer_dims(ctx.model, ctx.delta)
            buf = lpbuffer.build(ctx, channels=1)
            seen.add((dims, (buf.width, buf.height), buf.valid_count))
    assert seen == {((901, 1638), (901, 1638), 1_062_877)}
    assert time.perf_counter() - t0 < 1.0


@crit(3, "ground-truth pixel counts per preset")
def test_gt_counts():
    expected = {"2K": 3_686_400, "4K": 8_294_400, "8K": 33_177_600, "retinal": 74_649_600}
    for name, gt in expected.items():
        W, H = presets.RESOLUTIONS[name]
        ctx = MappingContext(c_r=1.0 / H, display_w=W, display_h=H)
        s = lpbuffer.stats(lpbuffer.build(ctx, channels=1), ctx)
        assert isinstance(s.gt_pixels, int) and s.gt_pixels == gt


@crit(4, "forward/inverse roundtrip below 1e-6 px")
def test_roundtrip():
    t0 = time.perf_counter()
    base = MappingContext()
    rng = np.random.default_rng(7)
    for ctx in (base, base.with_gaze(0.0, 0.0)):
        x = rng.uniform(0, 1920, 300_000)
        y = rng.uniform(0, 1080, 300_000)
        _, _, inside = mapping.forward_many(ctx, x, y)
        x, y = x[inside][:100_000], y[inside][:100_000]
        assert x.size == 100_000
        u, v, _ = mapping.forward_many(ctx, x, y)
        xb, yb = mapping.inverse_many(ctx, u, v)
        assert np.max(np.hypot(xb - x, yb - y)) < 1e-6
    assert time.perf_counter() - t0 < 1.0


@crit(5, "agreement with quadrature and brute-force oracles")
def test_oracle_equivalence():
    ctx = MappingContext()
    pivots = [p[0] for p in ctx.model.pivots]
    pts = np.concatenate([pivots, np.random.default_rng(3).uniform(0.0, 60.0, 100)])
    pts = pts[pts < 60.0]
    mine = mapping.u_of_e(ctx, pts)
    ref = np.array([oracles.u_quad(e) for e in pts])
    np.testing.assert_allclose(mine, ref, rtol=0, atol=1e-6)
    e_star, l_max = mapping.max_shading_height(ctx)
    e_scan, l_scan = oracles.max_height_scan()
    assert abs(e_star - e_scan) <= 1e-3
    assert l_max >= l_scan and l_max - l_scan < 1e-3


@crit(6, "baseline rates 4x under 2x display scale, gaze-sensitive; VaFR fixed")
def test_baseline_sensitivity():
    e = 15.0
    model = acuity.default_model()
    vafr = lambda c: (acuity.shading_rate(model, e), mapping.tangential_rate(c, e))
    ctx = MappingContext(model)
    v0 = vafr(ctx)
    ratios = {}
    for method, fn in (("LMFR", baselines.sr_lmfr), ("LaFR", baselines.sr_lafr)):
        p = BaselineParams(method=method, W=1920, H=1080)
        # double W and H; w = W / delta doubles while the angular mapping is kept
        big = BaselineParams(method=method, W=3840, H=2160, c_r=p.c_r, L_log=p.L_log)
        corner = p.with_gaze(0.0, 0.0)
        assert abs(fn(corner, e) - fn(p, e)) > 1e-9
        ratios[method] = fn(big, e) / fn(p, e)
    assert vafr(MappingContext(model, c_r=1.0 / 2160, display_w=3840, display_h=2160)) == v0
    assert vafr(ctx.with_gaze(0.0, 0.0)) == v0
    for method, ratio in ratios.items():
        assert abs(ratio - 4.0) <= 1e-9, f"{method}: rate ratio under 2x display scale is {ratio!r}"


@crit(7, "LaFR one-sided limits at 4.89 deg differ, gap frozen")
def test_lafr_discontinuity():
    p = BaselineParams(W=1440, H=1700, delta=1.8, alpha=0.85, beta=0.7, a=0.85)
    left, right = baselines.sr_lafr_limits(p)
    assert left != right
    assert right - left == pytest.approx(LAFR_GAP, rel=1e-9)


@pytest.fixture(scope="module")
def ctx1080():
    return MappingContext(c_r=1.0 / 1080, display_w=1920, display_h=1080)


def ring_mask(ctx, lo, hi):
    ys, xs = np.mgrid[0:ctx.display_h, 0:ctx.display_w]
    e = np.degrees(np.arctan(ctx.c_r * np.hypot(xs + 0.5 - ctx.gaze[0], ys + 0.5 - ctx.gaze[1])))
    return (e >= lo) & (e < hi)


@crit(8, "foveation: identity, foveal PSNR, falling detail on noise")
def test_foveation_pipeline(ctx1080):
    W, H = 1920, 1080
    fov = foveate.Foveator(ctx1080, threads=THREADS)

    flat = np.empty((H, W, 3), np.uint8)
    flat[...] = (23, 141, 250)
    t0 = time.perf_counter()
    out = fov(flat)
    assert time.perf_counter() - t0 < 10.0
    disk = ring_mask(ctx1080, 0.0, 60.0)
    assert np.abs(out.astype(int) - flat)[disk].max() == 0

    photo = transform.resize(data.astronaut(), (H, W), order=3, anti_aliasing=True)
    photo = np.clip(np.rint(photo * 255.0), 0, 255).astype(np.uint8)
    out = fov(photo)
    m = ring_mask(ctx1080, 0.0, 5.0)
    mse = np.mean((out[m].astype(float) - photo[m]) ** 2)
    assert 10.0 * math.log10(255.0**2 / mse) >= 30.0

    noise = np.random.default_rng(0).integers(0, 256, (H, W, 3), dtype=np.uint8)
    g = fov(noise).astype(float).mean(axis=2)
    lap = (g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:] - 4.0 * g[1:-1, 1:-1]) ** 2
    inner = ring_mask(ctx1080, 0.0, 90.0)[1:-1, 1:-1]
    assert inner.all()
    ys, xs = np.mgrid[1:H - 1, 1:W - 1]
    e = np.degrees(np.arctan(ctx1080.c_r * np.hypot(xs + 0.5 - 960, ys + 0.5 - 540)))
    edges = np.arange(0.0, 45.0 + 1e-9, 2.5)
    energy = [lap[(e >= a) & (e < b)].mean() for a, b in zip(edges[:-1], edges[1:])]
    assert np.all(np.diff(energy) <= 0.0), energy


@crit(9, "ray caster: ray counts, foveal accuracy, thread determinism")
def test_ray_caster():
    for name in presets.RESOLUTIONS:
        W, H = presets.RESOLUTIONS[name]
        scene, cam = raycast.fixture_scene(1, W, H)
        ctx = cam.context()
        buf, st = raycast.render_vafr_lp(scene, cam, ctx, threads=THREADS)
        assert st.primary_rays == buf.valid_count == lpbuffer.build(ctx, channels=1).valid_count

    W, H = 1920, 1080
    for n_lights in (1, 31):
        scene, cam = raycast.fixture_scene(n_lights, W, H)
        ctx = cam.context()
        t0 = time.perf_counter()
        img, _ = raycast.render_vafr(scene, cam, ctx, threads=THREADS)
        assert time.perf_counter() - t0 < 60.0
        r = math.tan(math.radians(2.0)) / cam.c_r
        x0, y0 = int(W / 2 - r), int(H / 2 - r)
        x1, y1 = int(math.ceil(W / 2 + r)), int(math.ceil(H / 2 + r))
        gt, _ = raycast.render_gt(scene, cam, window=(x0, y0, x1, y1), threads=THREADS)
        crop = img[y0:y1, x0:x1].astype(float)
        assert np.mean(np.abs(crop - gt)) / 255.0 <= 2.0 / 255.0

    scene, cam = raycast.fixture_scene(1, W, H)
    full, st = raycast.render_gt(scene, cam, threads=THREADS)
    assert st.primary_rays == W * H and full.shape == (H, W, 3)

    ctx = cam.context()
    a, _ = raycast.render_vafr(scene, cam, ctx, threads=1)
    b, _ = raycast.render_vafr(scene, cam, ctx, threads=max(THREADS, 4))
    assert a.tobytes() == b.tobytes()


@crit(10, "anisotropy: half delta halves the shading height")
def test_anisotropy():
    full = MappingContext()
    half = MappingContext(delta=ConstantDelta(0.5))
    e = np.linspace(0.0, 59.99, 6001)
    np.testing.assert_allclose(mapping.shading_height(half, e), 0.5 * mapping.shading_height(full, e),
                               rtol=1e-9, atol=0)
    n_full = lpbuffer.build(full, channels=1).valid_count
    n_half = lpbuffer.build(half, channels=1).valid_count
    assert n_half < n_full and abs(n_half - n_full / 2) <= 901
    ratio = mapping.tangential_rate(full, e[1:]) / mapping.radial_rate(full, e[1:])
    np.testing.assert_allclose(ratio, 1.0, rtol=0, atol=1e-9)
