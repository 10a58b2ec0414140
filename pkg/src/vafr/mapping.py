"""
Forward and inverse log-polar mapping driven by the acuity model.

Screen space is addressed in continuous pixel coordinates ``(x, y)`` with the
gaze point at ``(x0, y0)``. A point at pixel radius ``r`` from the gaze lies at
eccentricity ``e = atan(c_r * r)`` and polar angle ``theta`` (degrees, 0 along
+x, in ``[0, 360)``). Its log-polar coordinates are::

    u(e)        = integral_0^e 2 * acuity(t) dt
    v(e, theta) = delta(e) * theta * sin(2e) / mar(e)

so one LP texel is half an acuity cycle both radially and tangentially
(when ``delta == 1``). Neither ``u`` nor ``v`` depends on the display or the
gaze, which is what keeps the buffer size constant.

Functions accept scalars or numpy arrays and return the same kind.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .acuity import AcuityModel, default_model
from .errors import ConfigError, DomainError

__all__ = [
    "OUTSIDE",
    "ConstantDelta",
    "TableDelta",
    "parse_delta",
    "MappingContext",
    "compute_cr",
    "ecc_from_radius",
    "radius_from_ecc",
    "u_of_e",
    "e_of_u",
    "shading_height",
    "v_of",
    "radial_rate",
    "tangential_rate",
    "forward",
    "forward_many",
    "inverse",
    "inverse_many",
    "max_shading_height",
    "derive_buffer_dims",
]


class _Outside:
    """Marker returned by :func:`forward` for points at or past ``e_max``."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "OUTSIDE"

    def __bool__(self):
        return False


OUTSIDE = _Outside()


@dataclass(frozen=True)
class ConstantDelta:
    """Tangential/radial shading-rate ratio that does not vary with e."""

    value: float = 1.0

    def __post_init__(self):
        if not (self.value > 0.0 and math.isfinite(self.value)):
            raise ConfigError(f"delta must be positive and finite, got {self.value}")

    def __call__(self, e):
        return np.full_like(np.asarray(e, dtype=float), self.value)[()]

    def spec(self):
        return f"constant:{self.value!r}"


@dataclass(frozen=True)
class TableDelta:
    """Ratio interpolated linearly between ``(e_deg, ratio)`` pivots.

    Outside the table the end values are held.
    """

    pivots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(e), float(d)) for e, d in self.pivots)
        if not pts:
            raise ConfigError("delta table is empty")
        for i, (e, d) in enumerate(pts):
            if not (d > 0.0 and math.isfinite(d)):
                raise ConfigError(f"delta pivot {i}: ratio must be positive, got {d}")
            if i and e <= pts[i - 1][0]:
                raise ConfigError(f"delta pivot {i}: eccentricities must increase")
        object.__setattr__(self, "pivots", pts)

    def __call__(self, e):
        es, ds = zip(*self.pivots)
        return np.interp(e, es, ds)[()]

    def spec(self):
        return [list(p) for p in self.pivots]


def parse_delta(spec):
    """Parse ``"constant:<x>"``, a bare number, or a ``[[e, ratio], ...]`` table."""
    if spec is None:
        return ConstantDelta(1.0)
    if isinstance(spec, (ConstantDelta, TableDelta)):
        return spec
    if isinstance(spec, (int, float)):
        return ConstantDelta(float(spec))
    if isinstance(spec, str):
        kind, _, val = spec.partition(":")
        if kind.strip() != "constant" or not val:
            raise ConfigError(f"unrecognised delta spec {spec!r}")
        return ConstantDelta(float(val))
    return TableDelta(tuple(tuple(p) for p in spec))


@dataclass(frozen=True)
class MappingContext:
    """Everything needed to map between a display and the LP buffer.

    ``gaze`` is in continuous pixel coordinates. ``delta`` is any positive
    callable of eccentricity; it scales ``v`` and the shading height.
    """

    model: AcuityModel = field(default_factory=default_model)
    c_r: float = 1.0 / 1080.0
    display_w: int = 1920
    display_h: int = 1080
    gaze: tuple[float, float] | None = None
    delta: object = field(default_factory=ConstantDelta)

    def __post_init__(self):
        if not (self.c_r > 0.0 and math.isfinite(self.c_r)):
            raise ConfigError(f"c_r must be positive, got {self.c_r}")
        if self.display_w < 1 or self.display_h < 1:
            raise ConfigError(f"bad display size {self.display_w}x{self.display_h}")
        if self.gaze is None:
            object.__setattr__(self, "gaze", (self.display_w / 2.0, self.display_h / 2.0))
        x0, y0 = (float(g) for g in self.gaze)
        if not (0.0 <= x0 <= self.display_w and 0.0 <= y0 <= self.display_h):
            raise ConfigError(f"gaze {self.gaze} outside the {self.display_w}x{self.display_h} display")
        object.__setattr__(self, "gaze", (x0, y0))
        if not callable(self.delta):
            object.__setattr__(self, "delta", parse_delta(self.delta))

    @classmethod
    def for_camera(cls, film_height_mm, focal_length_mm, display_w, display_h, **kw):
        return cls(c_r=compute_cr(film_height_mm, focal_length_mm, display_h),
                   display_w=display_w, display_h=display_h, **kw)

    def with_gaze(self, x0, y0) -> "MappingContext":
        return replace(self, gaze=(x0, y0))

    @cached_property
    def dims(self) -> tuple[int, int]:
        return derive_buffer_dims(self.model, self.delta)

    @property
    def lp_w(self) -> int:
        return self.dims[0]

    @property
    def lp_h(self) -> int:
        return self.dims[1]

    @property
    def e_max(self) -> float:
        return self.model.e_max

    def to_json(self) -> dict:
        delta = self.delta.spec() if hasattr(self.delta, "spec") else None
        if delta is None:
            raise ConfigError("only constant or table delta functions serialise to JSON")
        return {
            "model": self.model.to_json(),
            "c_r": self.c_r,
            "display": [self.display_w, self.display_h],
            "gaze": list(self.gaze),
            "delta": delta,
        }

    @classmethod
    def from_json(cls, doc) -> "MappingContext":
        """Inverse of :meth:`to_json`.

        ``model`` may be an inline acuity document or a path to one; the
        camera may be given as ``c_r`` or as ``film_height_mm`` plus
        ``focal_length_mm`` (display height taken from ``display``).
        """
        if isinstance(doc, str):
            doc = json.loads(doc)
        model = doc.get("model")
        model = default_model() if model is None else AcuityModel.from_json(model)
        try:
            w, h = (int(v) for v in doc.get("display", (1920, 1080)))
        except (TypeError, ValueError):
            raise ConfigError(f"bad display entry {doc.get('display')!r}") from None
        if "c_r" in doc:
            c_r = float(doc["c_r"])
        elif "film_height_mm" in doc and "focal_length_mm" in doc:
            c_r = compute_cr(doc["film_height_mm"], doc["focal_length_mm"], h)
        else:
            c_r = 1.0 / h
        gaze = doc.get("gaze")
        return cls(model=model, c_r=c_r, display_w=w, display_h=h,
                   gaze=None if gaze is None else tuple(gaze),
                   delta=parse_delta(doc.get("delta")))


def _as_model(ctx):
    return ctx if isinstance(ctx, AcuityModel) else ctx.model


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def compute_cr(film_height_mm, focal_length_mm, display_height_px) -> float:
    """Pixel-to-tangent ratio ``(film / focal) / display_height``."""
    for name, v in (("film height", film_height_mm), ("focal length", focal_length_mm),
                    ("display height", display_height_px)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    return (film_height_mm / focal_length_mm) / display_height_px


def ecc_from_radius(ctx, r):
    """Eccentricity in degrees of a point ``r`` pixels from the gaze."""
    return _out(np.degrees(np.arctan(ctx.c_r * np.asarray(r, dtype=float))), r)


def radius_from_ecc(ctx, e):
    """Pixel radius for eccentricity ``e`` (degrees, below 90)."""
    e_arr = np.asarray(e, dtype=float)
    if np.any((e_arr < 0.0) | (e_arr >= 90.0)):
        raise DomainError("eccentricity must lie in [0, 90)")
    return _out(np.tan(np.radians(e_arr)) / ctx.c_r, e)


# Unchecked kernels. They accept e == e_max, evaluated on the last segment.

def _u(model, e):
    i = model.segment_index(e)
    m = model._m[i]
    w_lo = model._omega_lo[i]
    de = e - model._e_lo[i]
    flat = m == 0.0
    safe_m = np.where(flat, 1.0, m)
    curved = 2.0 / safe_m * np.log1p(m * de / w_lo)
    return model._u_lo[i] + np.where(flat, 2.0 * de / w_lo, curved)


def _e(model, u):
    i = np.clip(np.searchsorted(model._u_lo, u, side="right") - 1, 0, len(model.segments) - 1)
    m = model._m[i]
    w_lo = model._omega_lo[i]
    du = u - model._u_lo[i]
    flat = m == 0.0
    safe_m = np.where(flat, 1.0, m)
    curved = w_lo / safe_m * np.expm1(m * du / 2.0)
    e = model._e_lo[i] + np.where(flat, du * w_lo / 2.0, curved)
    return np.minimum(e, model.e_max)


def _mar(model, e):
    i = model.segment_index(e)
    return model._m[i] * e + model._omega[i]


def _l(model, delta, e):
    return delta(e) * 360.0 * np.sin(np.radians(2.0 * e)) / _mar(model, e)


def u_of_e(ctx, e):
    """LP abscissa for eccentricity ``e``; ``du/de = 2 * acuity(e)``."""
    model = _as_model(ctx)
    e_arr = model.check_range(e)
    return _out(_u(model, e_arr), e)


def e_of_u(ctx, u):
    """Eccentricity for LP abscissa ``u`` in ``[0, u(e_max)]``."""
    model = _as_model(ctx)
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0.0) | (u_arr > model.u_max)):
        raise DomainError(f"u outside [0, {model.u_max}]")
    return _out(_e(model, u_arr), u)


def shading_height(ctx, e):
    """Number of LP texels a full turn occupies at eccentricity ``e``."""
    model = ctx.model
    e_arr = model.check_range(e)
    return _out(_l(model, ctx.delta, e_arr), e)


def v_of(ctx, e, theta):
    """LP ordinate for eccentricity ``e`` and polar angle ``theta`` (degrees)."""
    model = ctx.model
    e_arr = model.check_range(e)
    t = np.asarray(theta, dtype=float)
    if np.any((t < 0.0) | (t >= 360.0)):
        raise DomainError("theta must lie in [0, 360)")
    v = ctx.delta(e_arr) * t * np.sin(np.radians(2.0 * e_arr)) / _mar(model, e_arr)
    return _out(v, np.broadcast(e_arr, t))


def radial_rate(ctx, e):
    """Cycles per degree along the radius, ``0.5 * du/de``."""
    model = _as_model(ctx)
    e_arr = model.check_range(e)
    return _out(1.0 / _mar(model, e_arr), e)


def tangential_rate(ctx, e):
    """Cycles per degree around the ring at eccentricity ``e`` (``e > 0``).

    The ring's ``shading_height`` texels are spread over a circumference of
    ``360 * sin(e) * cos(e)`` degrees of visual angle; two texels make a cycle.
    """
    model = ctx.model
    e_arr = model.check_range(e)
    if np.any(e_arr <= 0.0):
        raise DomainError("tangential rate is undefined at e = 0")
    r = np.radians(e_arr)
    rate = _l(model, ctx.delta, e_arr) / (720.0 * np.sin(r) * np.cos(r))
    return _out(rate, e)


def _polar(ctx, x, y):
    x0, y0 = ctx.gaze
    dx = np.asarray(x, dtype=float) - x0
    dy = np.asarray(y, dtype=float) - y0
    r = np.hypot(dx, dy)
    e = np.degrees(np.arctan(ctx.c_r * r))
    theta = np.degrees(np.arctan2(dy, dx))
    theta = np.where(theta < 0.0, theta + 360.0, theta)
    theta = np.where(theta >= 360.0, 0.0, theta)
    return e, theta


def forward_many(ctx, x, y):
    """Vectorised forward map.

    Returns ``(u, v, inside)``. Points with ``e >= e_max`` have
    ``inside == False`` and carry the coordinates of the outermost ring
    (``u = u(e_max)``) at their polar angle.
    """
    model = ctx.model
    e, theta = _polar(ctx, x, y)
    inside = e < model.e_max
    e_c = np.minimum(e, model.e_max)
    u = _u(model, e_c)
    v = theta / 360.0 * _l(model, ctx.delta, e_c)
    return u, v, inside


def forward(ctx, x, y):
    """Map a screen point to ``(u, v)``, or :data:`OUTSIDE` past ``e_max``."""
    u, v, inside = forward_many(ctx, x, y)
    if np.ndim(u) == 0:
        return (float(u), float(v)) if inside else OUTSIDE
    return u, v, inside


def inverse_many(ctx, u, v, *, check=True):
    """Vectorised inverse map ``(u, v) -> (x, y)``."""
    model = ctx.model
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if check and np.any((u < 0.0) | (u > model.u_max)):
        raise DomainError(f"u outside [0, {model.u_max}]")
    e = _e(model, u)
    l = _l(model, ctx.delta, e)
    if check and np.any((v < 0.0) | (v > l * (1.0 + 1e-12) + 1e-12)):
        raise DomainError("v exceeds the shading height of its column")
    theta = np.divide(360.0 * v, l, out=np.zeros(np.broadcast(v, l).shape), where=l > 0.0)
    r = np.tan(np.radians(e)) / ctx.c_r
    t = np.radians(theta)
    x0, y0 = ctx.gaze
    return r * np.cos(t) + x0, r * np.sin(t) + y0


def inverse(ctx, u, v):
    """Map LP coordinates back to continuous screen coordinates."""
    x, y = inverse_many(ctx, u, v)
    if np.ndim(x) == 0:
        return float(x), float(y)
    return x, y


def _max_height(model, delta, step=1e-3, tol=1e-6):
    g = np.arange(0.0, model.e_max, step)
    vals = _l(model, delta, g)
    k = int(np.argmax(vals))
    lo = max(0.0, g[k] - step)
    hi = min(model.e_max, g[k] + step)
    f = lambda e: float(_l(model, delta, np.asarray(e)))
    while hi - lo > tol:
        a = lo + (hi - lo) / 3.0
        b = hi - (hi - lo) / 3.0
        if f(a) < f(b):
            lo = a
        else:
            hi = b
    e_star = 0.5 * (lo + hi)
    if e_star >= model.e_max:
        e_star = np.nextafter(model.e_max, 0.0)
    return max(f(e_star), float(vals[k])), e_star


def max_shading_height(ctx):
    """``(e_star, l_max)``: where the shading height peaks, and its value."""
    l_max, e_star = _max_height(ctx.model, ctx.delta)
    return float(e_star), l_max


def derive_buffer_dims(model, delta=None) -> tuple[int, int]:
    """Constant LP buffer size ``(ceil(u(e_max)), ceil(max_e l(e)))``.

    The maximum of the shading height is located on a 0.001 degree grid and
    refined by ternary search. Nothing here depends on the display or gaze.
    """
    if isinstance(model, MappingContext):
        model, delta = model.model, model.delta
    delta = parse_delta(delta) if not callable(delta) else delta
    l_max, _ = _max_height(model, delta)
    return int(math.ceil(model.u_max)), int(math.ceil(l_max))
