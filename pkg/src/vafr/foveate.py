"""
Image foveation through the LP buffer.

``to_lp`` resamples a full-resolution image into the valid texels of an LP
buffer, ``lp_antialias`` (FXAA) cleans it up in LP space, and ``from_lp``
reconstructs a screen-space image by forward-mapping every output pixel and
sampling the buffer bilinearly. Images are ``(height, width, channels)``
uint8 arrays with 3 or 4 channels; pixel ``(i, j)`` has its centre at
``(j + 0.5, i + 0.5)`` in continuous screen coordinates.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import lpbuffer, mapping
from .fxaa import lp_antialias

__all__ = [
    "FoveationParams",
    "Foveator",
    "bilinear",
    "to_lp",
    "from_lp",
    "foveate",
    "lp_antialias",
    "read_image",
    "write_image",
]

AA_MODES = ("none", "lp_fxaa")
OUTSIDE_POLICIES = ("clamp_ring", "passthrough_source", "solid_color")

_ROWS_PER_CHUNK = 64


@dataclass(frozen=True)
class FoveationParams:
    gaze: tuple[float, float] | None = None
    aa_mode: str = "lp_fxaa"
    outside_policy: str = "clamp_ring"
    fill_color: tuple[int, ...] = (0, 0, 0, 255)

    def __post_init__(self):
        if self.aa_mode not in AA_MODES:
            raise ValueError(f"aa_mode must be one of {AA_MODES}, got {self.aa_mode!r}")
        if self.outside_policy not in OUTSIDE_POLICIES:
            raise ValueError(f"outside_policy must be one of {OUTSIDE_POLICIES}, got {self.outside_policy!r}")


def read_image(path) -> np.ndarray:
    """Load a PNG/PPM (anything Pillow reads) as an RGB or RGBA uint8 array."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA"):
            im = im.convert("RGBA" if "A" in im.mode else "RGB")
        return np.asarray(im).copy()


def write_image(path, img: np.ndarray):
    from PIL import Image

    path = Path(path)
    arr = np.ascontiguousarray(img)
    if path.suffix.lower() in (".ppm", ".pnm") and arr.shape[2] == 4:
        arr = arr[..., :3]
    Image.fromarray(arr, "RGBA" if arr.shape[2] == 4 else "RGB").save(path)


def bilinear(img: np.ndarray, x, y) -> np.ndarray:
    """Sample ``img`` at continuous coordinates with clamp-to-edge.

    Returns float64 values of shape ``x.shape + (channels,)``.
    """
    h, w = img.shape[:2]
    fx = np.clip(np.asarray(x, dtype=float) - 0.5, 0.0, w - 1)
    fy = np.clip(np.asarray(y, dtype=float) - 0.5, 0.0, h - 1)
    x0 = np.minimum(fx.astype(np.int64), w - 1)
    y0 = np.minimum(fy.astype(np.int64), h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = (fx - x0)[..., None]
    ty = (fy - y0)[..., None]
    a = img[y0, x0].astype(np.float64)
    b = img[y0, x1].astype(np.float64)
    c = img[y1, x0].astype(np.float64)
    d = img[y1, x1].astype(np.float64)
    top = a + (b - a) * tx
    bot = c + (d - c) * tx
    return top + (bot - top) * ty


def _check_image(img, ctx):
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ValueError(f"expected an (H, W, 3|4) image, got shape {img.shape}")
    if (img.shape[1], img.shape[0]) != (ctx.display_w, ctx.display_h):
        raise ValueError(
            f"image is {img.shape[1]}x{img.shape[0]} but the context display is "
            f"{ctx.display_w}x{ctx.display_h}"
        )


def _to_uint8(vals):
    return np.clip(np.rint(vals), 0, 255).astype(np.uint8)


def texel_screen_positions(ctx, buf: lpbuffer.LPBuffer):
    """Screen position of every valid texel centre, in :meth:`LPBuffer.texels` order.

    A column's ``h_u`` texels split the full turn evenly, so the centre of
    texel ``v`` sits at LP ordinate ``(v + 0.5) * l(e) / h_u``.
    """
    u, v = buf.texels()
    model = ctx.model
    uc = np.minimum(u + 0.5, model.u_max)
    e = mapping._e(model, uc)
    l = mapping._l(model, ctx.delta, e)
    vc = (v + 0.5) * l / buf.column_heights[u]
    x, y = mapping.inverse_many(ctx, uc, vc)
    return u, v, x, y


def to_lp(img: np.ndarray, ctx, buf: lpbuffer.LPBuffer) -> lpbuffer.LPBuffer:
    """Fill the valid texels of ``buf`` by bilinear sampling of ``img``."""
    _check_image(img, ctx)
    u, v, x, y = texel_screen_positions(ctx, buf)
    vals = bilinear(img, x, y)
    buf.clear()
    c = img.shape[2]
    buf.payload[v, u, :c] = _to_uint8(vals)
    if c == 3 and buf.channels == 4:
        buf.payload[v, u, 3] = 255
    return buf


def _sample_lp(buf, u, theta_frac):
    """Bilinear LP lookup with v wrapping inside each column and u clamped."""
    h = buf.column_heights
    tu = u - 0.5
    c0 = np.floor(tu).astype(np.int64)
    t = (tu - c0)[..., None]
    c1 = np.clip(c0 + 1, 0, buf.width - 1)
    c0 = np.clip(c0, 0, buf.width - 1)
    payload = buf.payload

    def column(c):
        hc = h[c]
        ok = hc > 0
        hs = np.where(ok, hc, 1)
        tv = theta_frac * hs - 0.5
        v0 = np.floor(tv).astype(np.int64)
        s = (tv - v0)[..., None]
        a = payload[v0 % hs, c].astype(np.float64)
        b = payload[(v0 + 1) % hs, c].astype(np.float64)
        return a + (b - a) * s, ok

    p0, ok0 = column(c0)
    p1, ok1 = column(c1)
    t = np.where(ok0[..., None], np.where(ok1[..., None], t, 0.0), 1.0)
    return p0 + (p1 - p0) * t


def _from_lp_rows(buf, ctx, params, source, out, r0, r1):
    w = ctx.display_w
    ys, xs = np.mgrid[r0:r1, 0:w]
    x = xs + 0.5
    y = ys + 0.5
    e, theta = mapping._polar(ctx, x, y)
    inside = e < ctx.model.e_max
    u = mapping._u(ctx.model, np.minimum(e, ctx.model.e_max))
    vals = _sample_lp(buf, u, theta / 360.0)
    if not np.issubdtype(buf.payload.dtype, np.integer):
        vals = vals * 255.0
    c = out.shape[2]
    block = _to_uint8(vals[..., :c])
    if params.outside_policy == "passthrough_source":
        if source is None:
            raise ValueError("passthrough_source needs the source image")
        block[~inside] = source[r0:r1][~inside][..., :c]
    elif params.outside_policy == "solid_color":
        fill = np.asarray(params.fill_color, dtype=np.uint8)
        block[~inside] = np.resize(fill, c)
    out[r0:r1] = block


def from_lp(buf: lpbuffer.LPBuffer, ctx, params: FoveationParams | None = None,
            source: np.ndarray | None = None, channels: int = 3, threads: int = 1) -> np.ndarray:
    """Reconstruct a ``display_h x display_w`` image from the LP buffer.

    Pixels past ``e_max`` follow ``params.outside_policy``. Work is split
    into fixed row blocks, so the output does not depend on ``threads``.
    """
    params = params or FoveationParams()
    if params.gaze is not None:
        ctx = ctx.with_gaze(*params.gaze)
    out = np.empty((ctx.display_h, ctx.display_w, channels), dtype=np.uint8)
    blocks = [(r, min(r + _ROWS_PER_CHUNK, ctx.display_h))
              for r in range(0, ctx.display_h, _ROWS_PER_CHUNK)]
    if threads <= 1:
        for r0, r1 in blocks:
            _from_lp_rows(buf, ctx, params, source, out, r0, r1)
    else:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(lambda b: _from_lp_rows(buf, ctx, params, source, out, *b), blocks))
    return out


class Foveator:
    """Reusable foveation pipeline owning a single LP buffer.

    The buffer size depends only on the acuity model and delta, so one
    allocation serves every frame and gaze position.
    """

    def __init__(self, ctx, params: FoveationParams | None = None, threads: int = 1):
        self.ctx = ctx
        self.params = params or FoveationParams()
        self.threads = threads
        self.buffer = lpbuffer.build(ctx)
        self.last_lp = None

    def __call__(self, img: np.ndarray, gaze=None) -> np.ndarray:
        params = self.params if gaze is None else replace(self.params, gaze=tuple(gaze))
        ctx = self.ctx if params.gaze is None else self.ctx.with_gaze(*params.gaze)
        to_lp(img, ctx, self.buffer)
        lp = lp_antialias(self.buffer, params.aa_mode)
        self.last_lp = lp
        return from_lp(lp, ctx, replace(params, gaze=None), source=img,
                       channels=img.shape[2], threads=self.threads)


def foveate(img: np.ndarray, ctx, params: FoveationParams | None = None, threads: int = 1) -> np.ndarray:
    """``to_lp`` then ``lp_antialias`` then ``from_lp``."""
    return Foveator(ctx, params, threads)(img)
