"""
Piecewise-linear visual acuity model.

Acuity is described by pivot points ``(eccentricity_deg, acuity_cpd)``. Between
two pivots the minimum angle of resolution (MAR, degrees per cycle, the
reciprocal of acuity) varies linearly with eccentricity::

    mar(e) = m_i * e + omega_i        for e in [e_i, e_{i+1})

The log-polar coordinate ``u(e)`` is the integral of ``2 * acuity(e)``, so each
segment also carries the integration constant ``c_i`` that keeps ``u``
continuous across pivots with ``u(0) = 0``.

All angles are in degrees.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "AcuitySegment",
    "AcuityModel",
    "default_model",
    "mar",
    "acuity",
    "shading_rate",
    "adapt_to_device",
]


@dataclass(frozen=True)
class AcuitySegment:
    """One linear MAR piece, valid on ``[e_lo, e_hi)``.

    ``u_lo`` is the log-polar abscissa at ``e_lo``; it is redundant with ``c``
    but lets ``u`` be evaluated with ``log1p`` for small slopes.
    """

    e_lo: float
    e_hi: float
    m: float
    omega: float
    c: float
    u_lo: float = 0.0

    def mar(self, e):
        return self.m * e + self.omega

    def u(self, e):
        """Log-polar abscissa on this segment (closed form, with ``c``)."""
        if self.m == 0.0:
            return 2.0 * e / self.omega + self.c
        return 2.0 * np.log(self.m * e + self.omega) / self.m + self.c


def _integral_2f(m, omega_lo, de):
    # integral of 2 / (omega_lo + m*t) dt for t in [0, de]
    if m == 0.0:
        return 2.0 * de / omega_lo
    return 2.0 / m * math.log1p(m * de / omega_lo)


@dataclass(frozen=True, eq=False)
class AcuityModel:
    """Piecewise-linear MAR model covering ``[0, e_max)``.

    Build one with :meth:`from_pivots` or :meth:`from_json`; the default model
    is available from :func:`default_model`.
    """

    segments: tuple[AcuitySegment, ...]
    e_max: float
    pivots: tuple[tuple[float, float], ...]
    _e_lo: np.ndarray = field(init=False, repr=False)
    _m: np.ndarray = field(init=False, repr=False)
    _omega: np.ndarray = field(init=False, repr=False)
    _u_lo: np.ndarray = field(init=False, repr=False)
    _omega_lo: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        segs = self.segments
        object.__setattr__(self, "_e_lo", np.array([s.e_lo for s in segs]))
        object.__setattr__(self, "_m", np.array([s.m for s in segs]))
        object.__setattr__(self, "_omega", np.array([s.omega for s in segs]))
        object.__setattr__(self, "_u_lo", np.array([s.u_lo for s in segs]))
        object.__setattr__(self, "_omega_lo", self._m * self._e_lo + self._omega)

    def __eq__(self, other):
        if not isinstance(other, AcuityModel):
            return NotImplemented
        return self.segments == other.segments and self.e_max == other.e_max

    def __hash__(self):
        return hash((self.segments, self.e_max))

    @classmethod
    def from_pivots(cls, pivots, e_max=None) -> "AcuityModel":
        """Build a model from ``[(e_deg, f_cpd), ...]``.

        The first pivot must sit at 0 degrees; the last must reach ``e_max``
        (which defaults to the last pivot's eccentricity). Acuity may not
        increase between pivots.
        """
        pts = _validate_pivots(pivots)
        if e_max is None:
            e_max = pts[-1][0]
        e_max = float(e_max)
        if not e_max > 0.0:
            raise ConfigError(f"e_max must be positive, got {e_max}")
        if pts[-1][0] < e_max:
            raise ConfigError(
                f"pivot {len(pts) - 1}: last pivot at {pts[-1][0]} deg does not reach e_max={e_max}"
            )

        segments = []
        u_lo = 0.0
        for i in range(len(pts) - 1):
            (e0, f0), (e1, f1) = pts[i], pts[i + 1]
            if e0 >= e_max:
                break
            w0, w1 = 1.0 / f0, 1.0 / f1
            m = (w1 - w0) / (e1 - e0)
            if m < 0.0:
                raise ConfigError(
                    f"pivot {i + 1}: acuity increases from {f0} to {f1} cpd (MAR slope must be >= 0)"
                )
            omega = w0 - m * e0
            if m == 0.0:
                c = u_lo - 2.0 * e0 / omega
            else:
                c = u_lo - 2.0 * math.log(w0) / m
            e_hi = min(e1, e_max)
            segments.append(AcuitySegment(e0, e_hi, m, omega, c, u_lo))
            u_lo += _integral_2f(m, w0, e_hi - e0)
        return cls(tuple(segments), e_max, tuple(pts))

    @classmethod
    def from_json(cls, source) -> "AcuityModel":
        """Load from a path, a JSON string, or an already-parsed dict.

        Schema: ``{"pivots": [[e_deg, f_cpd], ...], "e_max": 60.0}``.
        """
        if isinstance(source, dict):
            doc = source
        elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            doc = json.loads(Path(source).read_text())
        else:
            doc = json.loads(source)
        if "pivots" not in doc:
            raise ConfigError("acuity config needs a 'pivots' list")
        return cls.from_pivots(doc["pivots"], doc.get("e_max"))

    def to_json(self) -> dict:
        return {"pivots": [list(p) for p in self.pivots], "e_max": self.e_max}

    @property
    def u_max(self) -> float:
        """``u(e_max)``, taken as the limit from below."""
        s = self.segments[-1]
        return s.u_lo + _integral_2f(s.m, s.m * s.e_lo + s.omega, s.e_hi - s.e_lo)

    def segment_index(self, e):
        """Index of the segment containing ``e`` (pivots belong to the right)."""
        idx = np.searchsorted(self._e_lo, e, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def check_range(self, e):
        e = np.asarray(e, dtype=float)
        bad = ~((e >= 0.0) & (e < self.e_max))
        if np.any(bad):
            first = e[bad].flat[0] if e.ndim else float(e)
            raise DomainError(f"eccentricity {first!r} outside [0, {self.e_max})")
        return e


def _validate_pivots(pivots):
    pts = []
    try:
        items = list(pivots)
    except TypeError:
        raise ConfigError("pivots must be a list of [e_deg, f_cpd] pairs") from None
    if len(items) < 2:
        raise ConfigError("need at least two pivots")
    for i, p in enumerate(items):
        try:
            e, f = (float(v) for v in p)
        except (TypeError, ValueError):
            raise ConfigError(f"pivot {i}: expected [e_deg, f_cpd], got {p!r}") from None
        if not (math.isfinite(e) and math.isfinite(f)):
            raise ConfigError(f"pivot {i}: non-finite value {p!r}")
        if f <= 0.0:
            raise ConfigError(f"pivot {i}: acuity must be positive, got {f}")
        if i == 0 and e != 0.0:
            raise ConfigError(f"pivot 0: first pivot must be at 0 deg, got {e}")
        if pts and e <= pts[-1][0]:
            raise ConfigError(f"pivot {i}: eccentricity {e} not above previous {pts[-1][0]}")
        pts.append((e, f))
    return pts


_DEFAULT = None


def default_model() -> AcuityModel:
    """Model built from the bundled default pivots (40/10/6/5/4 cpd)."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("vafr").joinpath("data/default_acuity.json").read_text()
        _DEFAULT = AcuityModel.from_json(text)
    return _DEFAULT


def _scalar_out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def mar(model: AcuityModel, e):
    """Minimum angle of resolution in degrees per cycle."""
    e = model.check_range(e)
    i = model.segment_index(e)
    return _scalar_out(model._m[i] * e + model._omega[i], e)


def acuity(model: AcuityModel, e):
    """Resolvable frequency in cycles per degree, ``1 / mar``."""
    return _scalar_out(1.0 / np.asarray(mar(model, e)), e)


def shading_rate(model: AcuityModel, e):
    """Shading rate of the acuity-derived mapping (cycles per degree).

    Half the derivative of ``u`` is ``1 / mar``, which is the acuity itself.
    """
    return acuity(model, e)


def adapt_to_device(model: AcuityModel, foveal_cap_cpd: float) -> AcuityModel:
    """Clamp acuity to ``foveal_cap_cpd`` and re-express it as a pivot model.

    Where the cap binds the result is flat; elsewhere it keeps the original
    segments. New pivots are inserted where an original segment crosses the cap.
    """
    cap = float(foveal_cap_cpd)
    if not cap > 0.0:
        raise DomainError(f"device cap must be positive, got {cap}")
    w_cap = 1.0 / cap

    breaks = [p[0] for p in model.pivots if p[0] <= model.e_max]
    for s in model.segments:
        if s.m > 0.0:
            e_cross = (w_cap - s.omega) / s.m
            if s.e_lo < e_cross < s.e_hi:
                breaks.append(e_cross)
    breaks = sorted(set(breaks))

    pivots = []
    for e in breaks:
        if e < model.e_max:
            s = model.segments[int(model.segment_index(e))]
            w = s.m * e + s.omega
        else:
            s = model.segments[-1]
            w = s.m * model.e_max + s.omega
        pivots.append((e, min(1.0 / w, cap)))
    pivots = _merge_flat(pivots, cap)
    return AcuityModel.from_pivots(pivots, model.e_max)


def _merge_flat(pivots, cap):
    # interior pivots inside a capped run add nothing; keep the run's endpoints
    out = [pivots[0]]
    for i in range(1, len(pivots) - 1):
        if pivots[i - 1][1] == cap and pivots[i][1] == cap and pivots[i + 1][1] == cap:
            continue
        out.append(pivots[i])
    out.append(pivots[-1])
    return out
