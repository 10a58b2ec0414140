"""
FXAA restricted to the valid region of an LP buffer.

This follows the structure of the widely published FXAA 3.11 quality pass
(local contrast test, sub-pixel aliasing estimate, edge orientation, search
for both edge ends, final blend toward the neighbour across the edge). It runs
on the LP lattice rather than a plain image:

* vertical neighbours (``v +/- 1``) wrap modulo the column height;
* horizontal neighbours keep the row index, clamped to the neighbour column's
  last valid texel, and clamp at the first and last column.

The edge search walks one texel per step (12 steps). Half-texel bilinear taps
of the GPU version are replaced by averaging the two texels they straddle,
which is the same value.
"""
from __future__ import annotations

import numpy as np

from .lpbuffer import LPBuffer

__all__ = ["EDGE_THRESHOLD", "EDGE_THRESHOLD_MIN", "SUBPIX", "neighbours", "lp_antialias"]

EDGE_THRESHOLD = 1.0 / 8.0
EDGE_THRESHOLD_MIN = 1.0 / 24.0
SUBPIX = 0.75
SEARCH_STEPS = 12

_N, _S, _E, _W = 0, 1, 2, 3


def neighbours(buf: LPBuffer):
    """Flat texel coordinates and a ``(4, n)`` table of N/S/E/W neighbours.

    Texels are numbered column by column as in :meth:`LPBuffer.texels`.
    """
    h = buf.column_heights
    u, v = buf.texels()
    start = np.cumsum(h) - h
    idx = np.arange(u.size)

    hu = h[u]
    north = start[u] + (v + 1) % hu
    south = start[u] + (v - 1) % hu

    def side(step):
        u2 = np.clip(u + step, 0, buf.width - 1)
        h2 = h[u2]
        ok = h2 > 0
        v2 = np.minimum(v, np.maximum(h2 - 1, 0))
        return np.where(ok, start[u2] + v2, idx)

    table = np.stack([north, south, side(1), side(-1)])
    return u, v, table


def _luma(rgb):
    return rgb @ np.array([0.299, 0.587, 0.114])


def lp_antialias(buf: LPBuffer, mode: str = "lp_fxaa") -> LPBuffer:
    """Return an anti-aliased copy of ``buf``; ``mode='none'`` just copies."""
    out = buf.copy()
    if mode == "none" or buf.valid_count == 0:
        return out
    if mode != "lp_fxaa":
        raise ValueError(f"unknown anti-aliasing mode {mode!r}")

    u, v, nb = neighbours(buf)
    raw = buf.payload[v, u, :3]
    integer = np.issubdtype(buf.payload.dtype, np.integer)
    scale = float(np.iinfo(buf.payload.dtype).max) if integer else 1.0
    rgb = raw.astype(np.float64) / scale
    luma = _luma(rgb)

    lm = luma
    ln, ls, le, lw = luma[nb[_N]], luma[nb[_S]], luma[nb[_E]], luma[nb[_W]]
    rmax = np.maximum.reduce([lm, ln, ls, le, lw])
    rmin = np.minimum.reduce([lm, ln, ls, le, lw])
    rng = rmax - rmin
    active = ~(rng < np.maximum(EDGE_THRESHOLD_MIN, rmax * EDGE_THRESHOLD))
    sel = np.flatnonzero(active)
    if sel.size == 0:
        return out

    lm, ln, ls, le, lw, rng = lm[sel], ln[sel], ls[sel], le[sel], lw[sel], rng[sel]
    lnw = luma[nb[_W, nb[_N, sel]]]
    lne = luma[nb[_E, nb[_N, sel]]]
    lsw = luma[nb[_W, nb[_S, sel]]]
    lse = luma[nb[_E, nb[_S, sel]]]

    lns, lwe = ln + ls, lw + le
    lnwsw, lnese = lnw + lsw, lne + lse
    lnwne, lswse = lnw + lne, lsw + lse

    # sub-pixel aliasing estimate
    sub_a = (lns + lwe) * 2.0 + lnwsw + lnese
    sub_b = sub_a / 12.0 - lm
    sub_c = np.clip(np.abs(sub_b) / rng, 0.0, 1.0)
    sub_d = (-2.0 * sub_c + 3.0) * sub_c * sub_c
    sub_h = sub_d * sub_d * SUBPIX

    edge_horz = (np.abs(-2.0 * lw + lnwsw) + np.abs(-2.0 * lm + lns) * 2.0
                 + np.abs(-2.0 * le + lnese))
    edge_vert = (np.abs(-2.0 * ls + lswse) + np.abs(-2.0 * lm + lwe) * 2.0
                 + np.abs(-2.0 * ln + lnwne))
    horz = edge_horz >= edge_vert

    # across-edge pair: N/S for horizontal edges, W/E for vertical ones
    la = np.where(horz, ln, lw)
    lb = np.where(horz, ls, le)
    grad_a = np.abs(la - lm)
    grad_b = np.abs(lb - lm)
    pair_a = grad_a >= grad_b
    gradient = np.maximum(grad_a, grad_b)
    across_dir = np.where(horz, np.where(pair_a, _N, _S), np.where(pair_a, _W, _E))
    along_pos = np.where(horz, _E, _N)
    along_neg = np.where(horz, _W, _S)

    l_nn = np.where(pair_a, la, lb) + lm
    l_mm = lm - l_nn * 0.5
    m_lt_zero = l_mm < 0.0
    grad_scaled = gradient * 0.25

    def end_luma(pos):
        return 0.5 * (luma[pos] + luma[nb[across_dir, pos]]) - 0.5 * l_nn

    pos_n = sel.copy()
    pos_p = sel.copy()
    dst_n = np.zeros(sel.size)
    dst_p = np.zeros(sel.size)
    end_n = np.zeros(sel.size)
    end_p = np.zeros(sel.size)
    done_n = np.zeros(sel.size, dtype=bool)
    done_p = np.zeros(sel.size, dtype=bool)
    for _ in range(SEARCH_STEPS):
        step_n = ~done_n
        step_p = ~done_p
        if not (step_n.any() or step_p.any()):
            break
        pos_n = np.where(step_n, nb[along_neg, pos_n], pos_n)
        pos_p = np.where(step_p, nb[along_pos, pos_p], pos_p)
        dst_n += step_n
        dst_p += step_p
        end_n = np.where(step_n, end_luma(pos_n), end_n)
        end_p = np.where(step_p, end_luma(pos_p), end_p)
        done_n |= np.abs(end_n) >= grad_scaled
        done_p |= np.abs(end_p) >= grad_scaled

    good_n = (end_n < 0.0) != m_lt_zero
    good_p = (end_p < 0.0) != m_lt_zero
    span = dst_n + dst_p
    toward_n = dst_n < dst_p
    dst = np.minimum(dst_n, dst_p)
    good = np.where(toward_n, good_n, good_p)
    offset = np.where(good, 0.5 - dst / span, 0.0)
    offset = np.maximum(offset, sub_h)

    across = nb[across_dir, sel]
    c_m = rgb[sel]
    c_x = rgb[across]
    blended = c_m + (c_x - c_m) * offset[:, None]

    if integer:
        blended = np.clip(np.rint(blended * scale), 0, scale)
    out.payload[v[sel], u[sel], :3] = blended.astype(buf.payload.dtype)
    return out
