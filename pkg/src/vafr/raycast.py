"""
Small deterministic CPU ray caster.

Two entry points share one shading routine:

* :func:`render_gt` casts one primary ray per screen pixel;
* :func:`render_vafr` casts one primary ray per valid LP texel, writes the
  result into the LP buffer, anti-aliases there and reconstructs the screen
  image with the inverse mapping.

Shading is Lambert plus Blinn-Phong with hard shadows and no secondary
bounces. Lights have no distance falloff. Work is cut into fixed-size ray
blocks, so the output is identical for any thread count.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import foveate, lpbuffer
from .fxaa import lp_antialias
from .mapping import MappingContext, compute_cr

__all__ = [
    "Material",
    "Sphere",
    "Triangle",
    "PointLight",
    "DirectionalLight",
    "Scene",
    "Camera",
    "RenderStats",
    "generate_ray",
    "trace",
    "lambert",
    "shade",
    "render_gt",
    "render_vafr",
    "render_vafr_lp",
    "load_scene",
    "fixture_scene",
]

EPS = 1e-6
BLOCK = 1 << 16


@dataclass(frozen=True)
class Material:
    diffuse: tuple[float, float, float] = (0.8, 0.8, 0.8)
    specular: tuple[float, float, float] = (0.0, 0.0, 0.0)
    shininess: float = 32.0
    ambient: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float
    material: Material = Material()

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Triangle:
    vertices: tuple[tuple[float, float, float], ...]
    material: Material = Material()

    def __post_init__(self):
        a, b, c = (np.asarray(p, dtype=float) for p in self.vertices)
        if np.linalg.norm(np.cross(b - a, c - a)) < 1e-12:
            raise ValueError("triangle vertices are collinear")


@dataclass(frozen=True)
class PointLight:
    position: tuple[float, float, float]
    intensity: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class DirectionalLight:
    """Light travelling along ``direction`` (so surfaces facing ``-direction`` are lit)."""

    direction: tuple[float, float, float]
    intensity: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class Scene:
    spheres: tuple[Sphere, ...] = ()
    triangles: tuple[Triangle, ...] = ()
    point_lights: tuple[PointLight, ...] = ()
    directional_lights: tuple[DirectionalLight, ...] = ()
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.point_lights or self.directional_lights):
            raise ValueError("scene needs at least one light")

    @property
    def materials(self):
        return [s.material for s in self.spheres] + [t.material for t in self.triangles]


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; screen y grows downward, opposite to ``up``."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    right: tuple[float, float, float] = (1.0, 0.0, 0.0)
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    forward: tuple[float, float, float] = (0.0, 0.0, -1.0)
    film_height_mm: float = 24.0
    focal_length_mm: float = 24.0
    width: int = 1920
    height: int = 1080

    def __post_init__(self):
        b = np.array([self.right, self.up, self.forward], dtype=float)
        if not np.allclose(b @ b.T, np.eye(3), atol=1e-9):
            raise ValueError("camera basis is not orthonormal")

    @classmethod
    def look_at(cls, position, target, up_hint=(0.0, 1.0, 0.0), **kw):
        pos = np.asarray(position, dtype=float)
        fwd = np.asarray(target, dtype=float) - pos
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, up_hint)
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return cls(tuple(pos), tuple(right), tuple(up), tuple(fwd), **kw)

    @property
    def c_r(self) -> float:
        return compute_cr(self.film_height_mm, self.focal_length_mm, self.height)

    def context(self, gaze=None, **kw) -> MappingContext:
        """Mapping context whose ``c_r`` and display match this camera."""
        return MappingContext(c_r=self.c_r, display_w=self.width, display_h=self.height,
                              gaze=gaze, **kw)


@dataclass
class RenderStats:
    mode: str
    width: int
    height: int
    primary_rays: int = 0
    shadow_rays: int = 0
    stage_ms: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "mode": self.mode,
            "resolution": [self.width, self.height],
            "primary_rays": self.primary_rays,
            "shadow_rays": self.shadow_rays,
            "stage_ms": self.stage_ms,
        }


def generate_ray(cam: Camera, x, y):
    """Origins and unit directions of pinhole rays through screen points.

    The ray through a point ``r`` pixels from the screen centre makes an
    angle ``atan(c_r * r)`` with the forward axis.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c_r = cam.c_r
    sx = (x - cam.width / 2.0) * c_r
    sy = (y - cam.height / 2.0) * c_r
    right, up, fwd = (np.asarray(a, dtype=float) for a in (cam.right, cam.up, cam.forward))
    d = fwd + sx[..., None] * right - sy[..., None] * up
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    o = np.broadcast_to(np.asarray(cam.position, dtype=float), d.shape)
    return o, d


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


class _Prims:
    """Scene primitives flattened for vectorised tests; rays are (3, n) arrays."""

    def __init__(self, scene):
        self.spheres = [(np.asarray(s.center, dtype=float)[:, None], s.radius) for s in scene.spheres]
        self.tris = []
        for tri in scene.triangles:
            a, b, c = (np.asarray(p, dtype=float) for p in tri.vertices)
            e1, e2 = b - a, c - a
            nrm = np.cross(e1, e2)
            d00, d01, d11 = e1 @ e1, e1 @ e2, e2 @ e2
            den = d00 * d11 - d01 * d01
            du = (d11 * e1 - d01 * e2) / den
            dv = (d00 * e2 - d01 * e1) / den
            self.tris.append((a[:, None], nrm[:, None], float(a @ nrm), du[:, None], dv[:, None]))
        self.n_spheres = len(self.spheres)

    @staticmethod
    def hit_sphere(o, d, center, radius):
        oc = o - center
        b = _dot(oc, d)
        disc = b * b - (_dot(oc, oc) - radius * radius)
        sq = np.sqrt(np.maximum(disc, 0.0))
        t0 = -b - sq
        t1 = -b + sq
        t = np.where(t0 > EPS, t0, np.where(t1 > EPS, t1, np.inf))
        return np.where(disc >= 0.0, t, np.inf)

    @staticmethod
    def hit_triangle(o, d, a, nrm, a_dot_n, du, dv):
        den = _dot(d, nrm)
        ok = np.abs(den) > 1e-15
        t = (a_dot_n - _dot(o, nrm)) / np.where(ok, den, 1.0)
        rel = o + d * t - a
        u = _dot(rel, du)
        v = _dot(rel, dv)
        hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > EPS)
        return np.where(hit, t, np.inf)

    def closest(self, o, d):
        best = np.full(o.shape[1], np.inf)
        idx = np.full(o.shape[1], -1, dtype=np.int64)
        for k, (c, r) in enumerate(self.spheres):
            t = self.hit_sphere(o, d, c, r)
            closer = t < best
            best = np.where(closer, t, best)
            idx[closer] = k
        for j, tri in enumerate(self.tris):
            t = self.hit_triangle(o, d, *tri)
            closer = t < best
            best = np.where(closer, t, best)
            idx[closer] = self.n_spheres + j
        return best, idx

    def occluded(self, o, d, max_t):
        blocked = np.zeros(o.shape[1], dtype=bool)
        for c, r in self.spheres:
            blocked |= self.hit_sphere(o, d, c, r) < max_t
        for tri in self.tris:
            blocked |= self.hit_triangle(o, d, *tri) < max_t
        return blocked

    def normals(self, p, idx):
        n = np.zeros_like(p)
        for k, (c, r) in enumerate(self.spheres):
            m = idx == k
            if m.any():
                n[:, m] = (p[:, m] - c) / r
        for j, tri in enumerate(self.tris):
            m = idx == self.n_spheres + j
            if m.any():
                nrm = tri[1]
                n[:, m] = nrm / np.linalg.norm(nrm)
        return n


def trace(scene: Scene, o, d):
    """Closest hit per ray for ``(n, 3)`` origins/directions.

    Returns ``(t, primitive_index)``; spheres come first, then triangles;
    misses have ``t = inf`` and index -1.
    """
    o = np.ascontiguousarray(np.asarray(o, dtype=float).T)
    d = np.ascontiguousarray(np.asarray(d, dtype=float).T)
    return _Prims(scene).closest(o, d)


def lambert(normal, to_light):
    """Lambert cosine ``max(0, n . l)`` for unit vectors (last axis)."""
    return np.maximum(0.0, np.einsum("...i,...i->...", normal, to_light))


def shade(scene: Scene, o, d, counter=None, prims=None):
    """Radiance (float RGB in [0, 1]) seen along rays ``(o, d)`` of shape (n, 3)."""
    prims = prims or _Prims(scene)
    o = np.ascontiguousarray(np.asarray(o, dtype=float).T)
    d = np.ascontiguousarray(np.asarray(d, dtype=float).T)
    t, idx = prims.closest(o, d)
    out = np.empty((3, o.shape[1]))
    out[:] = np.asarray(scene.background, dtype=float)[:, None]
    hi = np.flatnonzero(np.isfinite(t))
    if hi.size == 0:
        return out.T
    dh = d[:, hi]
    p = o[:, hi] + dh * t[hi]
    view = -dh
    mi = idx[hi]
    n = prims.normals(p, mi)
    # two-sided: shade the face toward the viewer
    n = np.where(_dot(n, view) < 0.0, -n, n)

    mats = scene.materials
    kd = np.array([m.diffuse for m in mats]).T[:, mi]
    ks = np.array([m.specular for m in mats]).T[:, mi]
    sh = np.array([m.shininess for m in mats])[mi]
    col = np.array([m.ambient for m in mats]).T[:, mi]
    origin = p + n * 1e-5

    lights = [(np.asarray(L.position, dtype=float)[:, None], np.asarray(L.intensity, dtype=float), True)
              for L in scene.point_lights]
    lights += [((-np.asarray(L.direction, dtype=float) / np.linalg.norm(L.direction))[:, None],
                np.asarray(L.intensity, dtype=float), False) for L in scene.directional_lights]
    for vec, intensity, is_point in lights:
        if is_point:
            to_l = vec - p
            dist = np.sqrt(_dot(to_l, to_l))
            to_l = to_l / dist
        else:
            to_l = np.broadcast_to(vec, p.shape)
            dist = np.full(p.shape[1], np.inf)
        ndl = np.maximum(0.0, _dot(n, to_l))
        lit = np.flatnonzero(ndl > 0.0)
        if lit.size == 0:
            continue
        if counter is not None:
            counter["shadow"] += lit.size
        lt = to_l[:, lit]
        blocked = prims.occluded(origin[:, lit], lt, dist[lit])
        keep = ~blocked
        lit, lt = lit[keep], lt[:, keep]
        if lit.size == 0:
            continue
        h = lt + view[:, lit]
        h /= np.sqrt(_dot(h, h))
        spec = np.maximum(0.0, _dot(n[:, lit], h)) ** sh[lit]
        col[:, lit] += (kd[:, lit] * ndl[lit] + ks[:, lit] * spec) * intensity[:, None]
    out[:, hi] = col
    return np.clip(out, 0.0, 1.0).T


def _shade_points(scene, cam, x, y, threads, counter):
    n = x.size
    out = np.empty((n, 3), dtype=np.float32)
    blocks = [(s, min(s + BLOCK, n)) for s in range(0, n, BLOCK)]
    shadow = [0] * len(blocks)
    prims = _Prims(scene)

    def work(k):
        s, e = blocks[k]
        o, d = generate_ray(cam, x[s:e], y[s:e])
        c = {"shadow": 0}
        out[s:e] = shade(scene, o, d, c, prims)
        shadow[k] = c["shadow"]

    if threads <= 1:
        for k in range(len(blocks)):
            work(k)
    else:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(work, range(len(blocks))))
    counter["primary"] += n
    counter["shadow"] += sum(shadow)
    return out


def _to_u8(rgb):
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def render_gt(scene: Scene, cam: Camera, window=None, threads: int = 1):
    """One ray per pixel; returns ``(uint8 image, RenderStats)``.

    ``window=(x0, y0, x1, y1)`` renders only that pixel rectangle (the image
    returned is the window).
    """
    x0, y0, x1, y1 = window or (0, 0, cam.width, cam.height)
    st = RenderStats("gt", cam.width, cam.height)
    t0 = time.perf_counter()
    ys, xs = np.mgrid[y0:y1, x0:x1]
    counter = {"primary": 0, "shadow": 0}
    rgb = _shade_points(scene, cam, (xs + 0.5).ravel(), (ys + 0.5).ravel(), threads, counter)
    img = _to_u8(rgb).reshape(y1 - y0, x1 - x0, 3)
    st.primary_rays, st.shadow_rays = counter["primary"], counter["shadow"]
    st.stage_ms["trace"] = (time.perf_counter() - t0) * 1e3
    return img, st


def _check_consistent(cam, ctx):
    if (cam.width, cam.height) != (ctx.display_w, ctx.display_h):
        raise ValueError("camera and mapping context disagree on the display size")
    if not math.isclose(cam.c_r, ctx.c_r, rel_tol=1e-12):
        raise ValueError(f"camera c_r {cam.c_r} differs from context c_r {ctx.c_r}")


def render_vafr_lp(scene: Scene, cam: Camera, ctx: MappingContext, buf=None, threads: int = 1):
    """Ray stage only: shade every valid LP texel into a float32 buffer.

    Returns ``(buffer, RenderStats)``; nothing proportional to the display
    size is allocated.
    """
    _check_consistent(cam, ctx)
    if buf is None or buf.payload.dtype != np.float32:
        buf = lpbuffer.build(ctx, dtype=np.float32, channels=3)
    st = RenderStats("vafr", cam.width, cam.height)
    t0 = time.perf_counter()
    u, v, x, y = foveate.texel_screen_positions(ctx, buf)
    counter = {"primary": 0, "shadow": 0}
    rgb = _shade_points(scene, cam, x, y, threads, counter)
    buf.clear()
    buf.payload[v, u, :3] = rgb
    st.primary_rays, st.shadow_rays = counter["primary"], counter["shadow"]
    st.stage_ms["trace"] = (time.perf_counter() - t0) * 1e3
    return buf, st


def render_vafr(scene: Scene, cam: Camera, ctx: MappingContext, buf=None,
                aa_mode: str = "lp_fxaa", outside_policy: str = "clamp_ring", threads: int = 1):
    """Foveated render: LP ray stage, LP FXAA, inverse mapping to the screen."""
    buf, st = render_vafr_lp(scene, cam, ctx, buf, threads)
    t0 = time.perf_counter()
    aa = lp_antialias(buf, aa_mode)
    t1 = time.perf_counter()
    params = foveate.FoveationParams(aa_mode=aa_mode, outside_policy=outside_policy,
                                     fill_color=tuple(_to_u8(np.asarray(scene.background))))
    img = foveate.from_lp(aa, ctx, params, channels=3, threads=threads)
    t2 = time.perf_counter()
    st.stage_ms["antialias"] = (t1 - t0) * 1e3
    st.stage_ms["inverse"] = (t2 - t1) * 1e3
    return img, st


# -- scene files --------------------------------------------------------------

def _material(doc):
    if doc is None:
        return Material()
    return Material(
        diffuse=tuple(doc.get("diffuse", (0.8, 0.8, 0.8))),
        specular=tuple(doc.get("specular", (0.0, 0.0, 0.0))),
        shininess=float(doc.get("shininess", 32.0)),
        ambient=tuple(doc.get("ambient", (0.0, 0.0, 0.0))),
    )


def load_scene(source, width=1920, height=1080):
    """Read a scene document; returns ``(Scene, Camera)``.

    Schema::

        {"camera": {"position": [..], "look_at": [..], "up": [..],
                    "film_height_mm": 24, "focal_length_mm": 24},
         "background": [r, g, b],
         "spheres": [{"center": [..], "radius": r, "material": {...}}],
         "triangles": [{"vertices": [[..], [..], [..]], "material": {...}}],
         "lights": [{"type": "point", "position": [..], "intensity": [..]},
                    {"type": "directional", "direction": [..], "intensity": [..]}]}
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        doc = json.loads(text if text.lstrip().startswith("{") else Path(source).read_text())
    spheres = tuple(Sphere(tuple(s["center"]), float(s["radius"]), _material(s.get("material")))
                    for s in doc.get("spheres", ()))
    tris = tuple(Triangle(tuple(tuple(p) for p in t["vertices"]), _material(t.get("material")))
                 for t in doc.get("triangles", ()))
    pls, dls = [], []
    for L in doc.get("lights", ()):
        kind = L.get("type", "point")
        inten = tuple(L.get("intensity", (1.0, 1.0, 1.0)))
        if kind == "point":
            pls.append(PointLight(tuple(L["position"]), inten))
        elif kind == "directional":
            dls.append(DirectionalLight(tuple(L["direction"]), inten))
        else:
            raise ValueError(f"unknown light type {kind!r}")
    scene = Scene(spheres, tris, tuple(pls), tuple(dls), tuple(doc.get("background", (0.0, 0.0, 0.0))))
    cd = doc.get("camera", {})
    cam = Camera.look_at(
        cd.get("position", (0.0, 0.0, 0.0)),
        cd.get("look_at", (0.0, 0.0, -1.0)),
        cd.get("up", (0.0, 1.0, 0.0)),
        film_height_mm=float(cd.get("film_height_mm", 24.0)),
        focal_length_mm=float(cd.get("focal_length_mm", 24.0)),
        width=width,
        height=height,
    )
    return scene, cam


def fixture_scene(n_lights: int = 1, width: int = 1920, height: int = 1080):
    """Desk-scale test scene: floor, back wall, five spheres, ``n_lights`` lights.

    ``n_lights == 1`` uses a single directional light; larger counts place
    point lights on two rings above the scene. The sphere straight ahead is
    large enough to fill the central few degrees of view.
    """
    floor = Material(diffuse=(0.6, 0.6, 0.55), ambient=(0.03, 0.03, 0.03))
    wall = Material(diffuse=(0.5, 0.55, 0.7), ambient=(0.03, 0.03, 0.03))
    tris = (
        Triangle(((-20, -1, 5), (20, -1, 5), (20, -1, -30)), floor),
        Triangle(((-20, -1, 5), (20, -1, -30), (-20, -1, -30)), floor),
        Triangle(((-20, -1, -30), (20, -1, -30), (20, 15, -30)), wall),
        Triangle(((-20, -1, -30), (20, 15, -30), (-20, 15, -30)), wall),
    )
    spheres = (
        Sphere((0.0, 0.0, -6.0), 1.0, Material((0.85, 0.3, 0.25), (0.4, 0.4, 0.4), 48.0, (0.04, 0.02, 0.02))),
        Sphere((-2.5, -0.3, -8.0), 0.7, Material((0.25, 0.7, 0.3), (0.2, 0.2, 0.2), 16.0, (0.02, 0.04, 0.02))),
        Sphere((2.6, -0.4, -7.0), 0.6, Material((0.3, 0.4, 0.85), (0.5, 0.5, 0.5), 96.0, (0.02, 0.02, 0.04))),
        Sphere((1.0, 1.6, -11.0), 1.2, Material((0.8, 0.75, 0.3), (0.1, 0.1, 0.1), 8.0, (0.04, 0.04, 0.02))),
        Sphere((-4.0, 1.0, -14.0), 1.5, Material((0.7, 0.7, 0.7), (0.6, 0.6, 0.6), 128.0, (0.03, 0.03, 0.03))),
    )
    if n_lights == 1:
        pls, dls = (), (DirectionalLight((-0.4, -1.0, -0.5), (0.9, 0.9, 0.85)),)
    else:
        k = np.arange(n_lights)
        ring = np.where(k % 2 == 0, 6.0, 10.0)
        ang = 2.0 * np.pi * k / n_lights
        each = 1.2 / n_lights
        pls = tuple(PointLight((float(ring[i] * np.cos(ang[i])), 6.0 + (i % 3),
                                float(-8.0 + ring[i] * np.sin(ang[i]))), (each, each, each))
                    for i in range(n_lights))
        dls = ()
    scene = Scene(spheres, tris, pls, dls, (0.05, 0.05, 0.08))
    cam = Camera.look_at((0.0, 0.0, 0.0), (0.0, 0.0, -6.0), width=width, height=height)
    return scene, cam
