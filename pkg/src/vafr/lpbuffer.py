"""
Constant-size LP buffer with a per-column valid height.

Column ``u`` holds ``h_u`` shading points, the rounded shading height at the
column centre. Texels with ``v >= h_u`` lie outside the semi-elliptical valid
region and are never read or written by the pipeline. Within a column, ``v``
indices wrap modulo ``h_u`` (0 and 360 degrees are the same ray).

The payload is stored row-major as ``payload[v, u, channel]`` so it can be
viewed like any other image array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mapping

__all__ = ["LPBuffer", "BufferStats", "build", "column_heights", "stats", "dump_png"]


@dataclass(eq=False)
class LPBuffer:
    width: int
    height: int
    column_heights: np.ndarray
    payload: np.ndarray

    @property
    def valid_count(self) -> int:
        return int(self.column_heights.sum())

    @property
    def channels(self) -> int:
        return self.payload.shape[2]

    def valid_mask(self) -> np.ndarray:
        """Boolean ``(height, width)`` mask of texels inside the valid region."""
        v = np.arange(self.height)[:, None]
        return v < self.column_heights[None, :]

    def texels(self):
        """``(u, v)`` index arrays of all valid texels, column by column."""
        h = self.column_heights
        u = np.repeat(np.arange(self.width), h)
        starts = np.repeat(np.cumsum(h) - h, h)
        v = np.arange(u.size) - starts
        return u, v

    def clear(self):
        self.payload[...] = 0

    def copy(self) -> "LPBuffer":
        return LPBuffer(self.width, self.height, self.column_heights, self.payload.copy())


@dataclass(frozen=True)
class BufferStats:
    valid_count: int
    width: int
    height: int
    fill_ratio: float
    rays_per_eye: int
    display_w: int
    display_h: int

    @property
    def gt_pixels(self) -> int:
        return self.display_w * self.display_h

    @property
    def reduction(self) -> float:
        """How many times fewer shading points than native pixels."""
        return self.gt_pixels / self.valid_count

    def as_dict(self) -> dict:
        return {
            "valid_count": self.valid_count,
            "width": self.width,
            "height": self.height,
            "fill_ratio": self.fill_ratio,
            "rays_per_eye": self.rays_per_eye,
            "display": [self.display_w, self.display_h],
            "gt_pixels": self.gt_pixels,
            "reduction": self.reduction,
        }


def column_heights(ctx, width=None, height=None) -> np.ndarray:
    """Integer shading height of every column, sampled at column centres.

    A last column whose centre lies past ``u(e_max)`` uses ``u(e_max)``.
    Heights are rounded half-to-even.
    """
    if width is None or height is None:
        width, height = ctx.dims
    model = ctx.model
    centres = np.minimum(np.arange(width) + 0.5, model.u_max)
    e = mapping._e(model, centres)
    h = np.rint(mapping._l(model, ctx.delta, e))
    return np.clip(h, 0, height).astype(np.int64)


def build(ctx, dtype=np.uint8, channels=4) -> LPBuffer:
    """Allocate a zeroed buffer sized for ``ctx``'s model and delta."""
    w, h = ctx.dims
    heights = column_heights(ctx, w, h)
    return LPBuffer(w, h, heights, np.zeros((h, w, channels), dtype=dtype))


def stats(buf: LPBuffer, ctx) -> BufferStats:
    n = buf.valid_count
    return BufferStats(
        valid_count=n,
        width=buf.width,
        height=buf.height,
        fill_ratio=n / (buf.width * buf.height),
        rays_per_eye=n,
        display_w=ctx.display_w,
        display_h=ctx.display_h,
    )


def dump_png(buf: LPBuffer, path):
    """Write the buffer with invalid texels in magenta (v grows downward)."""
    from PIL import Image

    data = buf.payload[..., :3]
    if data.dtype != np.uint8:
        data = np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8)
    rgb = data.copy()
    rgb[~buf.valid_mask()] = (255, 0, 255)
    Image.fromarray(rgb, "RGB").save(path)
