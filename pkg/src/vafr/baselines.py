"""
Closed-form shading rates of kernel log-polar foveated renderers.

Two earlier log-polar methods are modelled here only through their shading
rate curves (cycles per degree versus eccentricity), not as renderers:

* LMFR maps the log-radius ``z`` to the buffer abscissa with ``u = z**4 * w``;
* LaFR splits the eccentricity range at a foveal boundary (4.89 degrees) into a
  power-law branch and an arccos branch.

Both depend on the display size through ``w = W / delta`` and on the gaze
through ``L_log``, the log of the largest gaze-to-corner distance. The
acuity-driven mapping in :mod:`vafr.mapping` has neither dependence, which is
what :func:`analyze` makes visible.

All angles are in degrees. The log-radius of eccentricity ``e`` is
``z(e) = ln(tan(e) / c_r) / L_log`` and
``LW(e) = dz/de * w = w * pi / (180 * L_log * sin(e) * cos(e))``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import acuity, mapping
from .errors import ConfigError, DomainError

__all__ = [
    "METHODS",
    "BaselineParams",
    "LaFRTerms",
    "lafr_terms",
    "log_radius",
    "lw",
    "sr_lmfr",
    "sr_lafr",
    "sr_lafr_limits",
    "sr_tangential_baseline",
    "sr_step",
    "DEFAULT_STEP",
    "PRESETS",
    "PRESET_GROUPS",
    "SweepSpec",
    "analyze",
    "write_csv",
    "CSV_HEADER",
]

METHODS = ("LMFR", "LaFR", "STEP")

LAFR_E_MAX = 55.0
TANGENTIAL_E_MIN = 0.01

# three-layer step approximation: (thresholds in degrees, rates in cpd)
DEFAULT_STEP = ((5.0, 20.0), (40.0, 15.0, 6.0))


def cr_from_fov(fov_deg: float, display_h: int) -> float:
    """``c_r`` for a display whose height spans ``fov_deg`` degrees."""
    if not 0.0 < fov_deg < 180.0:
        raise ConfigError(f"vertical field of view must lie in (0, 180), got {fov_deg}")
    return 2.0 * math.tan(math.radians(fov_deg / 2.0)) / display_h


def log_max_corner_distance(W: int, H: int, gaze) -> float:
    x0, y0 = gaze
    far = max(math.hypot(cx - x0, cy - y0) for cx in (0.0, W) for cy in (0.0, H))
    return math.log(far)


@dataclass(frozen=True)
class BaselineParams:
    """Parameters of one baseline curve.

    ``c_r`` defaults to a display whose height spans ``fov_deg`` degrees and
    ``L_log`` to the log of the largest gaze-to-corner distance in pixels.
    Both are frozen at construction, so ``dataclasses.replace`` on ``W`` or
    ``H`` changes ``w`` alone; use :meth:`with_display` to re-derive them.

    :param delta: reduction ratio, the LP buffer width is ``w = W / delta``
    :param alpha: LaFR foveal parameter in (0, 1)
    :param beta: LaFR peripheral parameter in (0, 1); 0.7 is the neutral value
    :param a: LaFR kernel exponent in (0, 1)
    :param e_foveal: LaFR branch boundary in degrees
    """

    method: str = "LaFR"
    W: int = 1440
    H: int = 1700
    delta: float = 1.8
    alpha: float = 0.85
    beta: float = 0.7
    a: float = 0.15
    gaze: tuple[float, float] | None = None
    c_r: float | None = None
    e_foveal: float = 4.89
    L_log: float | None = None
    fov_deg: float = 110.0
    lmfr_exponent: float = 4.0
    step: tuple = field(default=DEFAULT_STEP)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.W < 1 or self.H < 1:
            raise ConfigError(f"display must be positive, got {self.W}x{self.H}")
        if not self.delta > 0.0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.method == "LaFR":
            for name in ("alpha", "beta", "a"):
                val = getattr(self, name)
                if not 0.0 < val < 1.0:
                    raise ConfigError(f"{name} must lie in (0, 1), got {val}")
        gaze = self.gaze if self.gaze is not None else (self.W / 2.0, self.H / 2.0)
        object.__setattr__(self, "gaze", (float(gaze[0]), float(gaze[1])))
        if self.c_r is None:
            object.__setattr__(self, "c_r", cr_from_fov(self.fov_deg, self.H))
        if self.L_log is None:
            object.__setattr__(self, "L_log", log_max_corner_distance(self.W, self.H, self.gaze))
        if not self.c_r > 0.0:
            raise ConfigError(f"c_r must be positive, got {self.c_r}")
        if not self.L_log > 0.0:
            raise ConfigError(f"L_log must be positive, got {self.L_log}")

    def with_display(self, W, H, gaze=None) -> "BaselineParams":
        """Same method parameters on a ``W x H`` display, re-deriving ``c_r`` and ``L_log``."""
        return replace(self, W=W, H=H, gaze=gaze, c_r=None, L_log=None)

    def with_gaze(self, x0, y0) -> "BaselineParams":
        """Move the gaze, re-deriving ``L_log`` (``c_r`` is unchanged)."""
        return replace(self, gaze=(x0, y0), L_log=None)

    @property
    def w(self) -> float:
        return self.W / self.delta


def _angles(e, lo, hi, what, lo_open=True):
    e_arr = np.asarray(e, dtype=float)
    bad = (e_arr <= lo if lo_open else e_arr < lo) | (e_arr > hi) | ~np.isfinite(e_arr)
    if np.any(bad):
        raise DomainError(f"{what}: eccentricity must lie in ({lo}, {hi}], got {e_arr[bad].ravel()[:3]}")
    return e_arr


def _scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def log_radius(p: BaselineParams, e):
    """``z(e) = ln(tan(e) / c_r) / L_log``."""
    e_arr = _angles(e, 0.0, 90.0 - 1e-12, "log radius")
    return _scalar(np.log(np.tan(np.radians(e_arr)) / p.c_r) / p.L_log, e)


def lw(p: BaselineParams, e):
    """``LW(e) = w * pi / (180 * L_log * sin(e) * cos(e))``."""
    e_arr = _angles(e, 0.0, 90.0 - 1e-12, "LW")
    r = np.radians(e_arr)
    return _scalar(p.w * np.pi / (180.0 * p.L_log * np.sin(r) * np.cos(r)), e)


def _z_checked(p, e_arr, what):
    z = np.log(np.tan(np.radians(e_arr)) / p.c_r) / p.L_log
    bad = (z <= 0.0) | (z > 1.0)
    if np.any(bad):
        raise DomainError(
            f"{what}: log radius z must lie in (0, 1], got {z[bad].ravel()[:3]} "
            f"at e={e_arr[bad].ravel()[:3]}"
        )
    return z


def sr_lmfr(p: BaselineParams, e):
    """LMFR shading rate ``(k / 2) * z**(k-1) * LW(e)`` with kernel exponent ``k`` (4)."""
    e_arr = _angles(e, 0.0, 90.0 - 1e-12, "LMFR")
    z = _z_checked(p, e_arr, "LMFR")
    k = p.lmfr_exponent
    return _scalar(0.5 * k * z ** (k - 1.0) * lw(p, e_arr), e)


@dataclass(frozen=True)
class LaFRTerms:
    """Derived LaFR constants at the foveal boundary."""

    z_ef: float
    fa: float
    u_ef: float


def lafr_terms(p: BaselineParams) -> LaFRTerms:
    """Boundary log radius ``Z_ef``, kernel exponent ``Fa`` and boundary abscissa ``U_ef``.

    ``Fa = 1 - log_{Z_ef}((alpha * Z_ef)**(1 - a) / (1 - a))`` and
    ``U_ef = (Z_ef * (1 - Fa))**(1 / Fa)``. Raises :class:`DomainError` when
    ``Fa`` leaves (0, 1), where the power-law branch has no real value.
    """
    z_ef = math.log(math.tan(math.radians(p.e_foveal)) / p.c_r) / p.L_log
    if not 0.0 < z_ef < 1.0:
        raise DomainError(f"LaFR: boundary log radius Z_ef={z_ef:.6g} must lie in (0, 1)")
    arg = (p.alpha * z_ef) ** (1.0 - p.a) / (1.0 - p.a)
    fa = 1.0 - math.log(arg) / math.log(z_ef)
    if not 0.0 < fa < 1.0:
        raise DomainError(
            f"LaFR: kernel exponent Fa={fa:.6g} lies outside (0, 1) for a={p.a}, alpha={p.alpha}, "
            f"Z_ef={z_ef:.6g}; Z_ef*(1-Fa)={z_ef * (1.0 - fa):.6g} would be raised to a fractional power"
        )
    u_ef = (z_ef * (1.0 - fa)) ** (1.0 / fa)
    return LaFRTerms(z_ef, fa, u_ef)


def _lafr_inner(p, t, z, lw_e):
    return (1.0 - t.fa) / (2.0 * t.fa) * (z * (1.0 - t.fa)) ** ((1.0 - t.fa) / t.fa) * lw_e


def _lafr_outer(p, t, z, lw_e):
    za = (1.0 / z - 1.0 / t.z_ef) / (1.0 / t.z_ef - 1.0)
    if np.any(np.abs(za) >= 1.0):
        raise DomainError(f"LaFR: |Za| >= 1 (Za={np.asarray(za).ravel()[:3]}), arccos branch undefined")
    g = (2.0 * np.arccos(za) - np.pi) / np.pi
    k = p.beta / 0.7
    with np.errstate(divide="ignore"):
        dg = k * np.power(g, k - 1.0)
    rate = (dg * (1.0 - t.u_ef) / (np.pi * np.sqrt(1.0 - za * za))
            / (1.0 / t.z_ef - 1.0) / (z * z) * lw_e)
    if not np.all(np.isfinite(rate)):
        raise DomainError("LaFR: outer branch diverges at the foveal boundary for beta < 0.7")
    return rate


def sr_lafr(p: BaselineParams, e, side: str | None = None):
    """LaFR shading rate, ``0.5 * d(w * u)/de`` of its two-branch mapping.

    Eccentricities up to ``e_foveal`` use the power-law branch, larger ones
    the arccos branch. ``side='left'`` or ``'right'`` forces one branch, which
    is how the one-sided values at the boundary are obtained.
    """
    if side not in (None, "left", "right"):
        raise ValueError(f"side must be None, 'left' or 'right', got {side!r}")
    e_arr = np.atleast_1d(_angles(e, 0.0, LAFR_E_MAX, "LaFR"))
    t = lafr_terms(p)
    z = _z_checked(p, e_arr, "LaFR")
    lw_e = p.w * np.pi / (180.0 * p.L_log * np.sin(np.radians(e_arr)) * np.cos(np.radians(e_arr)))
    inner = e_arr <= p.e_foveal if side is None else np.full(e_arr.shape, side == "left")
    out = np.empty_like(e_arr)
    if inner.any():
        out[inner] = _lafr_inner(p, t, z[inner], lw_e[inner])
    if (~inner).any():
        out[~inner] = _lafr_outer(p, t, z[~inner], lw_e[~inner])
    return float(out[0]) if np.ndim(e) == 0 else out.reshape(np.shape(e))


def sr_lafr_limits(p: BaselineParams) -> tuple[float, float]:
    """Left and right limits of :func:`sr_lafr` at ``e_foveal``."""
    return sr_lafr(p, p.e_foveal, side="left"), sr_lafr(p, p.e_foveal, side="right")


def sr_tangential_baseline(p: BaselineParams, e):
    """Tangential rate of a log-polar buffer ``H / delta`` texels tall: ``(H/delta) / (720 cos e sin e)``."""
    e_arr = _angles(e, TANGENTIAL_E_MIN, 90.0 - 1e-12, "tangential", lo_open=False)
    r = np.radians(e_arr)
    return _scalar((p.H / p.delta) / (720.0 * np.cos(r) * np.sin(r)), e)


def sr_step(thresholds, rates, e):
    """Piecewise-constant rate; an eccentricity equal to a threshold takes the rate on its right."""
    th = np.asarray(thresholds, dtype=float)
    rt = np.asarray(rates, dtype=float)
    if rt.size != th.size + 1:
        raise ConfigError(f"need len(rates) == len(thresholds) + 1, got {rt.size} and {th.size}")
    if np.any(np.diff(th) < 0.0):
        raise ConfigError("step thresholds must be sorted")
    idx = np.searchsorted(th, np.asarray(e, dtype=float), side="right")
    return _scalar(rt[idx], e)


# named curves; "VaFR" rows come from the acuity model
PRESETS = {
    "VaFR": None,
    "STEP": dict(method="STEP"),
    "LMFR(1.8)": dict(method="LMFR", delta=1.8),
    "LaFR(1.8)": dict(method="LaFR", delta=1.8, alpha=0.85, beta=0.7),
    "LaFR(2.2)": dict(method="LaFR", delta=2.2, alpha=0.85, beta=0.7),
    "LMFR(8)": dict(method="LMFR", delta=8.0),
    "LaFR(8,0.78,0.9)": dict(method="LaFR", delta=8.0, alpha=0.78, beta=0.9),
}

PRESET_GROUPS = {
    "full": tuple(PRESETS),
    "original": ("VaFR", "STEP", "LMFR(1.8)", "LaFR(1.8)", "LaFR(2.2)"),
}

CSV_HEADER = ("method", "resolution", "gaze", "e", "SR_radial", "SR_tangential")


@dataclass(frozen=True)
class SweepSpec:
    """Methods x resolutions x gaze positions x eccentricities.

    Gaze entries are ``"center"``, ``"corner"`` (the top-left pixel corner)
    or an explicit ``(x, y)`` pixel position.
    """

    presets: tuple[str, ...] = PRESET_GROUPS["full"]
    resolutions: tuple[tuple[int, int], ...] = (
        (1440, 1700), (1920, 1080), (2560, 1440), (7680, 4320), (11520, 6480))
    gazes: tuple = ("center",)
    eccentricities: tuple[float, ...] = tuple(np.round(np.arange(0.5, 55.01, 0.5), 6))
    fov_deg: float = 110.0
    model: acuity.AcuityModel | None = None

    def __post_init__(self):
        unknown = [n for n in self.presets if n not in PRESETS]
        if unknown:
            raise ConfigError(f"unknown presets {unknown}; known: {sorted(PRESETS)}")


def _gaze_xy(g, W, H):
    if g == "center":
        return W / 2.0, H / 2.0
    if g == "corner":
        return 0.0, 0.0
    x, y = g
    return float(x), float(y)


def _gaze_label(g):
    return g if isinstance(g, str) else f"{g[0]:g},{g[1]:g}"


def _try(fn, *args):
    try:
        val = float(fn(*args))
    except DomainError:
        return None
    return val if math.isfinite(val) else None


def analyze(spec: SweepSpec | None = None) -> list[tuple]:
    """One row ``(method, resolution, gaze, e, SR_radial, SR_tangential)`` per sample.

    Samples outside a method's domain get ``None`` instead of aborting the sweep.
    Row order follows the sweep nesting order, so output is deterministic.
    """
    spec = spec or SweepSpec()
    model = spec.model or acuity.default_model()
    vafr_ctx = mapping.MappingContext(model)
    rows = []
    for name in spec.presets:
        for W, H in spec.resolutions:
            for g in spec.gazes:
                gaze = _gaze_xy(g, W, H)
                params = None
                if PRESETS[name] is not None:
                    params = BaselineParams(W=W, H=H, gaze=gaze, fov_deg=spec.fov_deg, **PRESETS[name])
                for e in spec.eccentricities:
                    radial, tang = _rates(name, params, vafr_ctx, model, e)
                    rows.append((name, f"{W}x{H}", _gaze_label(g), float(e), radial, tang))
    return rows


def _rates(name, p, vafr_ctx, model, e):
    if p is None:
        return (_try(acuity.shading_rate, model, e), _try(mapping.tangential_rate, vafr_ctx, e))
    if p.method == "STEP":
        rate = _try(sr_step, *p.step, e)
        return rate, rate
    radial = _try(sr_lmfr if p.method == "LMFR" else sr_lafr, p, e)
    return radial, _try(sr_tangential_baseline, p, e)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def write_csv(rows, fileobj):
    """Write rows with a header; floats carry 9 significant digits, missing values are empty."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
