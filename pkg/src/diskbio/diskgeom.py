"""Disk meshes and quadrature rules.

Reference triangle for every rule in this module is
``T = {(x1, x2): 0 <= x2 <= x1 <= 1}`` (area 1/2), mapped to a physical
triangle ``(P0, P1, P2)`` by ``x = P0 + x1 (P1 - P0) + x2 (P2 - P1)``.
The matching barycentric coordinates are ``(1 - x1, x1 - x2, x2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .specfun import ModeIndex, psh_rt

PAIR_RELATIONS = ("coincident", "edge", "vertex", "far")


class MeshError(RuntimeError):
    pass


@dataclass(frozen=True)
class TriangleMesh:
    """Flat triangulation of the disk of radius ``a``.

    ``triangles`` are counterclockwise vertex triples.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex: np.ndarray
    a: float = 1.0
    level: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertex)

    def corners(self):
        v = self.vertices[self.triangles]
        return v[:, 0], v[:, 1], v[:, 2]

    @property
    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            p0, p1, p2 = self.corners()
            e1, e2 = p1 - p0, p2 - p0
            self._cache["areas"] = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return self._cache["areas"]

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def max_edge_length(self) -> float:
        v = self.vertices[self.triangles]
        d = np.linalg.norm(v - np.roll(v, 1, axis=1), axis=2)
        return float(d.max())

    def scaled(self, factor: float) -> "TriangleMesh":
        """Radially scaled copy (maps ``D_a`` onto ``D_{factor a}``)."""
        return TriangleMesh(self.vertices * factor, self.triangles, self.boundary_vertex,
                            self.a * factor, self.level)

    def locate(self, points: np.ndarray, tol: float = 0.25):
        """Containing triangle and barycentric coordinates for each point.

        Points in the thin segments between the polygon and the circle are
        assigned to the nearest boundary triangle (barycentrics slightly
        negative, partition of unity preserved).
        """
        if "tree" not in self._cache:
            self._cache["tree"] = cKDTree(self.centroids)
        tree = self._cache["tree"]
        k = min(12, self.n_triangles)
        _, cand = tree.query(points, k=k)
        cand = np.atleast_2d(cand).reshape(len(points), k)
        p0, p1, p2 = (c[cand] for c in self.corners())
        e1, e2 = p1 - p0, p2 - p0
        det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
        d = points[:, None, :] - p0
        b1 = (d[..., 0] * e2[..., 1] - d[..., 1] * e2[..., 0]) / det
        b2 = (e1[..., 0] * d[..., 1] - e1[..., 1] * d[..., 0]) / det
        bary = np.stack([1.0 - b1 - b2, b1, b2], axis=-1)
        score = bary.min(axis=-1)
        best = score.argmax(axis=1)
        rows = np.arange(len(points))
        if np.any(score[rows, best] < -tol):
            raise MeshError("point location failed: a point lies far outside the mesh")
        return cand[rows, best], bary[rows, best]

    def pair_relations(self):
        """Sparse list of touching triangle pairs ``(i, j, n_shared)``."""
        if "pairs" not in self._cache:
            nv = self.n_vertices
            vt = [[] for _ in range(nv)]
            for t, tri in enumerate(self.triangles):
                for v in tri:
                    vt[v].append(t)
            pairs = {}
            for t, tri in enumerate(self.triangles):
                for v in tri:
                    for s in vt[v]:
                        pairs[(t, s)] = pairs.get((t, s), 0) + 1
            keys = np.array(list(pairs.keys()), dtype=np.int64).reshape(-1, 2)
            counts = np.array(list(pairs.values()), dtype=np.int64)
            self._cache["pairs"] = (keys[:, 0], keys[:, 1], counts)
        return self._cache["pairs"]


def mesh_disk(a: float = 1.0, level: int = 0) -> TriangleMesh:
    """Hexagonal fan refined ``level`` times by quadrisection.

    New midpoints of boundary edges are pushed onto the circle ``r = a``,
    so refinement is nested except for those projected points.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    ang = np.arange(6) * np.pi / 3
    verts = [np.zeros(2)] + [a * np.array([np.cos(t), np.sin(t)]) for t in ang]
    verts = np.array(verts)
    tris = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)], dtype=np.int64)
    bnd = np.array([False] + [True] * 6)
    for _ in range(level):
        verts, tris, bnd = _quadrisect(verts, tris, bnd, a)
    return TriangleMesh(verts, tris, bnd, float(a), level)


def _quadrisect(verts, tris, bnd, a):
    edge_mid = {}
    new_verts = list(verts)
    new_bnd = list(bnd)

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in edge_mid:
            p = 0.5 * (verts[i] + verts[j])
            on_rim = bnd[i] and bnd[j]
            if on_rim:
                p = a * p / np.linalg.norm(p)
            edge_mid[key] = len(new_verts)
            new_verts.append(p)
            new_bnd.append(on_rim)
        return edge_mid[key]

    out = []
    for i, j, k in tris:
        ij, jk, ki = midpoint(i, j), midpoint(j, k), midpoint(k, i)
        out += [[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]]
    # an interior edge joining two rim vertices would be misflagged; the fan
    # construction never produces one (checked in tests)
    return np.array(new_verts), np.array(out, dtype=np.int64), np.array(new_bnd)


# ---------------------------------------------------------------------------
# quadrature rules


@dataclass(frozen=True)
class QuadRule:
    """Quadrature nodes/weights.

    ``nodes`` has shape ``(n, 2)`` for planar rules and ``(n, 4)`` for pair
    rules (``x1, x2, y1, y2`` in reference coordinates).
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __len__(self):
        return len(self.weights)


def gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _bary_to_ref(b):
    # barycentrics (l0, l1, l2) -> (x1, x2) with l1 = x1 - x2, l2 = x2
    return np.stack([b[:, 1] + b[:, 2], b[:, 2]], axis=1)


def _orbit3(a):
    return np.array([[a, a, 1 - 2 * a], [a, 1 - 2 * a, a], [1 - 2 * a, a, a]])


_DUNAVANT = {
    1: ([np.array([[1 / 3, 1 / 3, 1 / 3]])], [1.0]),
    2: ([_orbit3(1 / 6)], [1 / 3]),
    4: ([_orbit3(0.445948490915965), _orbit3(0.091576213509771)],
        [0.223381589678011, 0.109951743655322]),
    5: ([np.array([[1 / 3, 1 / 3, 1 / 3]]), _orbit3(0.470142064105115), _orbit3(0.101286507323456)],
        [0.225, 0.132394152788506, 0.125939180544827]),
}


@lru_cache(maxsize=None)
def triangle_quad(order: int) -> QuadRule:
    """Symmetric rule on the reference triangle, exact up to total degree ``order``."""
    if not 1 <= order <= 10:
        raise ValueError(f"unsupported triangle rule order {order}")
    key = 4 if order == 3 else order
    if key in _DUNAVANT:
        orbits, ws = _DUNAVANT[key]
        bary = np.vstack(orbits)
        w = np.concatenate([np.full(len(o), wi) for o, wi in zip(orbits, ws)])
        return QuadRule(_bary_to_ref(bary), 0.5 * w, "triangle-regular")
    # collapsed Gauss product, symmetrised over the six vertex permutations
    n = (order + 3) // 2
    g, gw = gauss01(n)
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(gw, gw, indexing="ij")
    l1 = u.ravel() * (1 - v.ravel())
    l2 = u.ravel() * v.ravel()
    w = (wu * wv * u).ravel()
    base = np.stack([1 - l1 - l2, l1, l2], axis=1)
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    bary = np.vstack([base[:, p] for p in perms])
    w = np.tile(w, 6) / 6.0
    return QuadRule(_bary_to_ref(bary), w, "triangle-regular")


@lru_cache(maxsize=None)
def singular_pair_quad(relation: str, order: int) -> QuadRule:
    """Four-dimensional rule for a pair of reference triangles.

    The adjacent cases use the Sauter-Schwab splitting of ``T x T`` into
    simplices on which ``|x - y|`` vanishes only on a coordinate face; the
    factor ``xi^3`` of the transformed Jacobian absorbs a ``1/|x - y|``
    singularity.  Conventions on the shared entities (reference coords):

    * coincident: same vertex order;
    * edge: shared edge is ``x2 = 0`` (``P0 -> P1``) in both triangles;
    * vertex: shared vertex is ``P0`` of both.
    """
    if relation not in PAIR_RELATIONS:
        raise ValueError(f"unknown pair relation {relation!r}")
    if relation == "far":
        if not 1 <= order <= 10:
            raise ValueError(f"unsupported order {order}")
        t = triangle_quad(order)
        n = len(t)
        nodes = np.hstack([np.repeat(t.nodes, n, axis=0), np.tile(t.nodes, (n, 1))])
        w = np.outer(t.weights, t.weights).ravel()
        return QuadRule(nodes, w, "pair-far")
    if not 2 <= order <= 8:
        raise ValueError(f"unsupported singular order {order}")
    g, gw = gauss01(order)
    grids = np.meshgrid(g, g, g, g, indexing="ij")
    wgrid = np.meshgrid(gw, gw, gw, gw, indexing="ij")
    xi, e1, e2, e3 = (c.ravel() for c in grids)
    w0 = np.prod([c.ravel() for c in wgrid], axis=0)
    one = np.ones_like(xi)
    parts = []
    if relation == "coincident":
        jac = xi ** 3 * e1 ** 2 * e2
        maps = [
            ((one, 1 - e1 + e1 * e2), (1 - e1 * e2 * e3, 1 - e1)),
            ((1 - e1 * e2 * e3, 1 - e1), (one, 1 - e1 + e1 * e2)),
            ((one, e1 * (1 - e2 + e2 * e3)), (1 - e1 * e2, e1 * (1 - e2))),
            ((1 - e1 * e2, e1 * (1 - e2)), (one, e1 * (1 - e2 + e2 * e3))),
            ((1 - e1 * e2 * e3, e1 * (1 - e2 * e3)), (one, e1 * (1 - e2))),
            ((one, e1 * (1 - e2)), (1 - e1 * e2 * e3, e1 * (1 - e2 * e3))),
        ]
        jacs = [jac] * 6
    elif relation == "edge":
        maps = [
            ((one, e1 * e3), (1 - e1 * e2, e1 * (1 - e2))),
            ((one, e1), (1 - e1 * e2 * e3, e1 * e2 * (1 - e3))),
            ((1 - e1 * e2, e1 * (1 - e2)), (one, e1 * e2 * e3)),
            ((1 - e1 * e2 * e3, e1 * e2 * (1 - e3)), (one, e1)),
            ((1 - e1 * e2 * e3, e1 * (1 - e2 * e3)), (one, e1 * e2)),
        ]
        base = xi ** 3 * e1 ** 2
        jacs = [base] + [base * e2] * 4
    else:
        maps = [
            ((one, e1), (e2, e2 * e3)),
            ((e2, e2 * e1), (one, e3)),
        ]
        jacs = [xi ** 3 * e2] * 2
    for ((a1, a2), (b1, b2)), jac in zip(maps, jacs):
        parts.append((np.stack([xi * a1, xi * a2, xi * b1, xi * b2], axis=1), w0 * jac))
    nodes = np.vstack([p[0] for p in parts])
    w = np.concatenate([p[1] for p in parts])
    return QuadRule(nodes, w, f"pair-{relation}")


@lru_cache(maxsize=None)
def _weighted_rule_cached(a: float, n_r: int, n_theta: int) -> QuadRule:
    x, w = np.polynomial.legendre.leggauss(n_r)
    phi = 0.25 * np.pi * (x + 1.0)
    wphi = 0.25 * np.pi * w
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    r = a * np.sin(phi)
    # int f / omega_a dD = int f a sin(phi) dphi dtheta
    wr = a * np.sin(phi) * wphi
    R, TH = np.meshgrid(r, th, indexing="ij")
    W = np.repeat(wr, n_theta) * (2 * np.pi / n_theta)
    nodes = np.stack([R.ravel() * np.cos(TH.ravel()), R.ravel() * np.sin(TH.ravel())], axis=1)
    return QuadRule(nodes, W, "disk-weighted")


def weighted_disk_quad(a: float = 1.0, n_r: int = 32, n_theta: int = 64) -> QuadRule:
    """Rule for ``int_{D_a} f(x) / sqrt(a^2 - |x|^2) dx``.

    ``r = a sin(phi)`` removes the rim singularity; Gauss-Legendre in
    ``phi``, periodic trapezoid in ``theta``.
    """
    if n_r < 1 or n_theta < 1:
        raise ValueError("n_r and n_theta must be >= 1")
    return _weighted_rule_cached(float(a), int(n_r), int(n_theta))


def weighted_rule_polar(rule: QuadRule, a: float = 1.0):
    """``(r, theta, omega_a)`` of a disk-weighted rule's nodes."""
    x, y = rule.nodes[:, 0], rule.nodes[:, 1]
    r = np.hypot(x, y)
    return r, np.arctan2(y, x), np.sqrt(np.clip(a * a - r * r, 0.0, None))


def psh_project(f, mode, rule: QuadRule) -> complex:
    """Coefficient ``(f, y_l^m)_{1/omega} = int f conj(y_l^m) / omega`` on ``D_1``.

    ``f`` takes arrays ``(r, theta)``.
    """
    if rule.kind != "disk-weighted":
        raise ValueError("psh_project needs a disk-weighted rule")
    mode = mode if isinstance(mode, ModeIndex) else ModeIndex(*mode)
    r, th, om = weighted_rule_polar(rule)
    vals = np.asarray(f(r, th)) * np.conj(psh_rt(mode.l, mode.m, r, th, om))
    return complex(np.sum(rule.weights * vals))
