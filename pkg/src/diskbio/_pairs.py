"""Compiled triangle-pair integration loops used by :mod:`diskbio.assembly`.

Every routine integrates ``k(x, y) lambda_a(x) lambda_b(y)`` over all
ordered triangle pairs and scatters the 3x3 local blocks into the
requested global layouts.  Triangles are processed colour by colour
(no two triangles of a colour share a vertex), so the ``prange`` loop
writes disjoint rows and the summation order is fixed.
"""
from __future__ import annotations

import numba as nb
import numpy as np

# the bundled TBB is often too old; prefer OpenMP, then the portable queue
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

KERNEL_V = 0
KERNEL_VBAR = 1

_INV4PI = 1.0 / (4.0 * np.pi)
_TWO_PI2 = 2.0 / np.pi ** 2


@nb.njit(cache=True, inline="always")
def _kernel(kid, x0, x1, y0, y1, a):
    d = np.sqrt((x0 - y0) ** 2 + (x1 - y1) ** 2)
    if kid == KERNEL_V:
        return _INV4PI / d
    ox = np.sqrt(max(a * a - x0 * x0 - x1 * x1, 0.0))
    oy = np.sqrt(max(a * a - y0 * y0 - y1 * y1, 0.0))
    return _TWO_PI2 * np.arctan2(ox * oy, a * d) / d


@nb.njit(cache=True)
def _local_block(kid, a, P, Q, xr, yr, w, perm_i, perm_j, out):
    """Accumulate the 3x3 block for one pair into ``out`` (original local order).

    ``P``, ``Q`` are the reordered corner coordinates, ``xr``/``yr``
    reference nodes, ``w`` weights (Jacobians not yet applied).
    """
    jx = abs((P[1, 0] - P[0, 0]) * (P[2, 1] - P[1, 1]) - (P[1, 1] - P[0, 1]) * (P[2, 0] - P[1, 0]))
    jy = abs((Q[1, 0] - Q[0, 0]) * (Q[2, 1] - Q[1, 1]) - (Q[1, 1] - Q[0, 1]) * (Q[2, 0] - Q[1, 0]))
    loc = np.zeros((3, 3))
    for q in range(w.shape[0]):
        s1, s2 = xr[q, 0], xr[q, 1]
        t1, t2 = yr[q, 0], yr[q, 1]
        x0 = P[0, 0] + s1 * (P[1, 0] - P[0, 0]) + s2 * (P[2, 0] - P[1, 0])
        x1 = P[0, 1] + s1 * (P[1, 1] - P[0, 1]) + s2 * (P[2, 1] - P[1, 1])
        y0 = Q[0, 0] + t1 * (Q[1, 0] - Q[0, 0]) + t2 * (Q[2, 0] - Q[1, 0])
        y1 = Q[0, 1] + t1 * (Q[1, 1] - Q[0, 1]) + t2 * (Q[2, 1] - Q[1, 1])
        kw = w[q] * _kernel(kid, x0, x1, y0, y1, a)
        bx0, bx1, bx2 = 1.0 - s1, s1 - s2, s2
        by0, by1, by2 = 1.0 - t1, t1 - t2, t2
        loc[0, 0] += kw * bx0 * by0
        loc[0, 1] += kw * bx0 * by1
        loc[0, 2] += kw * bx0 * by2
        loc[1, 0] += kw * bx1 * by0
        loc[1, 1] += kw * bx1 * by1
        loc[1, 2] += kw * bx1 * by2
        loc[2, 0] += kw * bx2 * by0
        loc[2, 1] += kw * bx2 * by1
        loc[2, 2] += kw * bx2 * by2
    jac = jx * jy
    for p in range(3):
        for q in range(3):
            out[perm_i[p], perm_j[q]] += jac * loc[p, q]


@nb.njit(cache=True)
def _scatter(i, j, loc, tris, curls, want_p0, want_p1, want_curl, out0, out1, outc):
    if want_p0:
        s = 0.0
        for p in range(3):
            for q in range(3):
                s += loc[p, q]
        out0[i, j] += s
    if want_p1:
        for p in range(3):
            for q in range(3):
                out1[tris[i, p], tris[j, q]] += loc[p, q]
    if want_curl:
        s = 0.0
        for p in range(3):
            for q in range(3):
                s += loc[p, q]
        for p in range(3):
            for q in range(3):
                c = curls[i, p, 0] * curls[j, q, 0] + curls[i, p, 1] * curls[j, q, 1]
                outc[tris[i, p], tris[j, q]] += c * s


@nb.njit(cache=True, parallel=True)
def pair_integrals(kid, a, verts, tris, curls, colour_ptr, colour_tris,
                   touch_ptr, touch_j, touch_rel, touch_pi, touch_pj,
                   diam, cent,
                   far_x, far_y, far_w, mid_x, mid_y, mid_w, near_x, near_y, near_w,
                   co_x, co_y, co_w, ed_x, ed_y, ed_w, vx_x, vx_y, vx_w,
                   mid_ratio, far_ratio,
                   want_p0, want_p1, want_curl, out0, out1, outc):
    nt = tris.shape[0]
    ident = np.array([0, 1, 2])
    for c in range(colour_ptr.shape[0] - 1):
        members = colour_tris[colour_ptr[c]:colour_ptr[c + 1]]
        for kk in nb.prange(members.shape[0]):
            i = members[kk]
            P = np.empty((3, 2))
            Q = np.empty((3, 2))
            loc = np.zeros((3, 3))
            t0 = touch_ptr[i]
            t1 = touch_ptr[i + 1]
            nxt = t0
            for j in range(nt):
                if nxt < t1 and touch_j[nxt] == j:
                    rel = touch_rel[nxt]
                    for p in range(3):
                        P[p, 0] = verts[tris[i, touch_pi[nxt, p]], 0]
                        P[p, 1] = verts[tris[i, touch_pi[nxt, p]], 1]
                        Q[p, 0] = verts[tris[j, touch_pj[nxt, p]], 0]
                        Q[p, 1] = verts[tris[j, touch_pj[nxt, p]], 1]
                    loc[:, :] = 0.0
                    if rel == 3:
                        _local_block(kid, a, P, Q, co_x, co_y, co_w, touch_pi[nxt], touch_pj[nxt], loc)
                    elif rel == 2:
                        _local_block(kid, a, P, Q, ed_x, ed_y, ed_w, touch_pi[nxt], touch_pj[nxt], loc)
                    else:
                        _local_block(kid, a, P, Q, vx_x, vx_y, vx_w, touch_pi[nxt], touch_pj[nxt], loc)
                    nxt += 1
                else:
                    for p in range(3):
                        P[p, 0] = verts[tris[i, p], 0]
                        P[p, 1] = verts[tris[i, p], 1]
                        Q[p, 0] = verts[tris[j, p], 0]
                        Q[p, 1] = verts[tris[j, p], 1]
                    dist = np.sqrt((cent[i, 0] - cent[j, 0]) ** 2 + (cent[i, 1] - cent[j, 1]) ** 2)
                    h = max(diam[i], diam[j])
                    loc[:, :] = 0.0
                    if dist > far_ratio * h:
                        _local_block(kid, a, P, Q, far_x, far_y, far_w, ident, ident, loc)
                    elif dist > mid_ratio * h:
                        _local_block(kid, a, P, Q, mid_x, mid_y, mid_w, ident, ident, loc)
                    else:
                        _local_block(kid, a, P, Q, near_x, near_y, near_w, ident, ident, loc)
                _scatter(i, j, loc, tris, curls, want_p0, want_p1, want_curl, out0, out1, outc)


@nb.njit(cache=True)
def kernel_values(kid, a, x, y):
    out = np.empty(x.shape[0])
    for q in range(x.shape[0]):
        out[q] = _kernel(kid, x[q, 0], x[q, 1], y[q, 0], y[q, 1], a)
    return out
