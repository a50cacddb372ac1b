"""Dense Galerkin matrices for V, W, V-bar, W-bar on triangulated disks."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _pairs
from .diskgeom import MeshError, QuadRule, TriangleMesh, singular_pair_quad, triangle_quad, weighted_disk_quad
from .kernels import OperatorKind


class SpaceKind(str, Enum):
    P0 = "P0"
    P1 = "P1"
    P1_0 = "P1_0"


@dataclass(frozen=True)
class FunctionSpace:
    """A finite element space on ``mesh``; ``dofs`` are triangle or vertex ids."""

    kind: SpaceKind
    mesh: TriangleMesh = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.kind is SpaceKind.P1_0 and self.dof_count == 0:
            raise MeshError("P1_0 space is empty: the mesh has no interior vertex")

    @property
    def dofs(self) -> np.ndarray:
        if self.kind is SpaceKind.P0:
            return np.arange(self.mesh.n_triangles)
        if self.kind is SpaceKind.P1:
            return np.arange(self.mesh.n_vertices)
        return self.mesh.interior_vertices

    @property
    def dof_count(self) -> int:
        return len(self.dofs)

    def interpolate(self, f) -> np.ndarray:
        """Nodal interpolant (P1, P1_0) or centroid value (P0) of ``f(x, y)``."""
        pts = self.mesh.centroids if self.kind is SpaceKind.P0 else self.mesh.vertices[self.dofs]
        return np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)

    def project_weighted(self, g, n_r: int | None = None, n_theta: int | None = None) -> np.ndarray:
        """L2 projection of ``g / omega_a`` with the load integrated over the true disk."""
        M = assemble_mass(self.mesh, self, self)
        return np.linalg.solve(M, weighted_load(self.mesh, self, g, n_r, n_theta))

    def project(self, f, order: int = 6) -> np.ndarray:
        """L2 projection of ``f(x, y)`` onto the space."""
        M = assemble_mass(self.mesh, self, self)
        return np.linalg.solve(M, load_vector(self.mesh, self, f, order))


@dataclass
class GalerkinMatrix:
    operator: str
    trial: FunctionSpace
    test: FunctionSpace
    entries: np.ndarray
    level: int
    a: float

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def quadratic_form(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        v = u if v is None else v
        return float(np.conj(v) @ self.entries @ u)


@dataclass(frozen=True)
class QuadConfig:
    """Pair-quadrature settings.

    ``near_order`` is used for non-touching pairs closer than
    ``mid_ratio`` element diameters, ``regular_order`` up to
    ``far_ratio`` diameters and ``far_order`` beyond.
    """

    regular_order: int = 4
    singular_order: int = 5
    near_order: int = 5
    far_order: int = 2
    mid_ratio: float = 2.0
    far_ratio: float = 5.0
    n_r: int = 64
    n_theta: int = 128

    def __post_init__(self):
        for name in ("regular_order", "near_order", "far_order"):
            if not 1 <= getattr(self, name) <= 10:
                raise ValueError(f"{name} must lie in 1..10")
        if not 2 <= self.singular_order <= 8:
            raise ValueError("singular_order must lie in 2..8")
        if not 0 < self.mid_ratio <= self.far_ratio:
            raise ValueError("need 0 < mid_ratio <= far_ratio")


DEFAULT_QUAD = QuadConfig()


def p1_surface_curl(mesh: TriangleMesh) -> np.ndarray:
    """Surface curls ``e3 x grad phi`` of the P1 hat functions, shape ``(nt, 3, 2)``."""
    P = mesh.vertices[mesh.triangles]
    det = ((P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1])
           - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0]))
    if np.any(np.abs(det) <= 1e-14 * mesh.max_edge_length() ** 2):
        raise MeshError("degenerate triangle")
    # grad lambda_k = rot(-90)(P_{k+2} - P_{k+1}) / det, curl rotates by +90
    edge = np.roll(P, -2, axis=1) - np.roll(P, -1, axis=1)
    return -edge / det[:, None, None]


def assemble_mass(mesh: TriangleMesh, row_space: FunctionSpace, col_space: FunctionSpace) -> np.ndarray:
    """Exact mass matrix ``int phi_i psi_j`` for P0/P1/P1_0 combinations."""
    area = mesh.areas
    nt, nv = mesh.n_triangles, mesh.n_vertices
    tris = mesh.triangles

    def full(kind):
        return SpaceKind.P0 if kind is SpaceKind.P0 else SpaceKind.P1

    rk, ck = full(row_space.kind), full(col_space.kind)
    if rk is SpaceKind.P0 and ck is SpaceKind.P0:
        M = np.diag(area)
    elif rk is SpaceKind.P1 and ck is SpaceKind.P1:
        M = np.zeros((nv, nv))
        loc = (np.ones((3, 3)) + np.eye(3)) / 12.0
        for p in range(3):
            for q in range(3):
                np.add.at(M, (tris[:, p], tris[:, q]), area * loc[p, q])
    else:
        M = np.zeros((nv, nt))
        for p in range(3):
            np.add.at(M, (tris[:, p], np.arange(nt)), area / 3.0)
        if rk is SpaceKind.P0:
            M = M.T
    return M[np.ix_(_full_index(row_space), _full_index(col_space))]


def _full_index(space: FunctionSpace) -> np.ndarray:
    return space.dofs


def load_vector(mesh: TriangleMesh, space: FunctionSpace, f, order: int = 6) -> np.ndarray:
    """``int f phi_i`` by a regular triangle rule; ``f`` is a callable ``f(x, y)``."""
    rule = triangle_quad(order)
    P = mesh.vertices[mesh.triangles]
    s1, s2 = rule.nodes[:, 0], rule.nodes[:, 1]
    bary = np.stack([1 - s1, s1 - s2, s2], axis=1)
    pts = np.einsum("qk,tkd->tqd", bary, P)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float) * np.broadcast_to(rule.weights, pts.shape[:2])
    vals = vals * (2.0 * mesh.areas)[:, None]
    if space.kind is SpaceKind.P0:
        return vals.sum(axis=1)
    out = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(out, mesh.triangles[:, k], vals @ bary[:, k])
    return out[space.dofs]


def weighted_load(mesh: TriangleMesh, space: FunctionSpace, g=None, n_r: int | None = None,
                  n_theta: int | None = None) -> np.ndarray:
    """``int g phi_i omega_a^{-1}`` over the true disk ``D_a`` (``g`` defaults to 1).

    Nodes of the weighted rule that fall into the thin slivers between the
    polygon and the circle are attributed to the nearest boundary triangle,
    whose basis functions are extended linearly; this keeps the partition of
    unity, so the P1 entries sum to ``int g omega_a^{-1}``.
    """
    n_r = n_r or max(64, 8 * 2 ** mesh.level)
    n_theta = n_theta or 2 * n_r
    rule = weighted_disk_quad(mesh.a, n_r, n_theta)
    tri, bary = mesh.locate(rule.nodes)
    w = rule.weights if g is None else rule.weights * g(rule.nodes[:, 0], rule.nodes[:, 1])
    if space.kind is SpaceKind.P0:
        return np.bincount(tri, weights=w, minlength=mesh.n_triangles)
    q = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(q, mesh.triangles[tri, k], w * bary[:, k])
    return q[space.dofs]


def dual_weight_vector(mesh: TriangleMesh, space: FunctionSpace, n_r: int | None = None,
                       n_theta: int | None = None) -> np.ndarray:
    """``q_i = <phi_i, omega_a^{-1}>``; sums to ``2 pi a`` on P1."""
    return weighted_load(mesh, space, None, n_r, n_theta)


def _colouring(mesh: TriangleMesh):
    """Greedy colouring so that triangles of one colour share no vertex."""
    nt = mesh.n_triangles
    ii, jj, _ = mesh.pair_relations()
    nbrs = [[] for _ in range(nt)]
    for i, j in zip(ii.tolist(), jj.tolist()):
        if i != j:
            nbrs[i].append(j)
    colour = -np.ones(nt, dtype=np.int64)
    for t in range(nt):
        used = {colour[s] for s in nbrs[t]}
        c = 0
        while c in used:
            c += 1
        colour[t] = c
    order = np.argsort(colour, kind="stable")
    ptr = np.concatenate([[0], np.cumsum(np.bincount(colour))])
    return ptr.astype(np.int64), order.astype(np.int64)


def _touching(mesh: TriangleMesh):
    """CSR list of touching pairs with the vertex permutations for the pair rules."""
    ii, jj, cnt = mesh.pair_relations()
    order = np.lexsort((jj, ii))
    ii, jj, cnt = ii[order], jj[order], cnt[order]
    tris = mesh.triangles
    pi = np.empty((len(ii), 3), dtype=np.int64)
    pj = np.empty((len(ii), 3), dtype=np.int64)
    for k, (i, j) in enumerate(zip(ii.tolist(), jj.tolist())):
        ti, tj = tris[i].tolist(), tris[j].tolist()
        if i == j:
            pi[k] = pj[k] = (0, 1, 2)
            continue
        shared = [v for v in ti if v in tj]
        first = [ti.index(v) for v in shared]
        second = [tj.index(v) for v in shared]
        pi[k] = first + [p for p in range(3) if p not in first]
        pj[k] = second + [p for p in range(3) if p not in second]
    ptr = np.concatenate([[0], np.cumsum(np.bincount(ii, minlength=mesh.n_triangles))])
    return ptr.astype(np.int64), jj.astype(np.int64), cnt.astype(np.int64), pi, pj


def _split(rule: QuadRule):
    n = np.ascontiguousarray
    return n(rule.nodes[:, :2]), n(rule.nodes[:, 2:]), n(rule.weights)


def _pair_pass(mesh: TriangleMesh, kernel: int, quad: QuadConfig, want_p0=False, want_p1=False,
               want_curl=False):
    """Run one pass over all triangle pairs with kernel ``kernel``."""
    cache = mesh._cache
    if "colouring" not in cache:
        cache["colouring"] = _colouring(mesh)
        cache["touching"] = _touching(mesh)
    cptr, cord = cache["colouring"]
    tptr, tj, trel, tpi, tpj = cache["touching"]
    verts = np.ascontiguousarray(mesh.vertices, dtype=float)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    curls = p1_surface_curl(mesh)
    P = verts[tris]
    diam = np.max(np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2), axis=1)
    nt, nv = mesh.n_triangles, mesh.n_vertices
    out0 = np.zeros((nt, nt) if want_p0 else (1, 1))
    out1 = np.zeros((nv, nv) if want_p1 else (1, 1))
    outc = np.zeros((nv, nv) if want_curl else (1, 1))
    rules = [singular_pair_quad("far", quad.far_order), singular_pair_quad("far", quad.regular_order),
             singular_pair_quad("far", quad.near_order),
             singular_pair_quad("coincident", quad.singular_order),
             singular_pair_quad("edge", quad.singular_order),
             singular_pair_quad("vertex", quad.singular_order)]
    args = [a for r in rules for a in _split(r)]
    _pairs.pair_integrals(kernel, float(mesh.a), verts, tris, curls, cptr, cord,
                          tptr, tj, trel, tpi, tpj, diam, mesh.centroids,
                          *args, float(quad.mid_ratio), float(quad.far_ratio),
                          want_p0, want_p1, want_curl, out0, out1, outc)
    sym = lambda A: 0.5 * (A + A.T)  # noqa: E731
    return (sym(out0) if want_p0 else None, sym(out1) if want_p1 else None,
            sym(outc) if want_curl else None)


def _galerkin(op, space, A, mesh):
    idx = space.dofs
    if A.shape[0] != len(idx):
        A = A[np.ix_(idx, idx)]
    return GalerkinMatrix(str(op), space, space, np.ascontiguousarray(A), mesh.level, mesh.a)


def _layer(mesh, space, quad, kernel, op):
    space = _as_space(mesh, space)
    if space.kind is SpaceKind.P0:
        A, _, _ = _pair_pass(mesh, kernel, quad, want_p0=True)
    else:
        _, A, _ = _pair_pass(mesh, kernel, quad, want_p1=True)
    return _galerkin(op, space, A, mesh)


def _as_space(mesh, space):
    return space if isinstance(space, FunctionSpace) else FunctionSpace(SpaceKind(space), mesh)


def assemble_single_layer(mesh: TriangleMesh, space="P0", quad: QuadConfig = DEFAULT_QUAD) -> GalerkinMatrix:
    """Galerkin matrix of ``V`` (kernel ``1/(4 pi |x-y|)``) on P0, P1 or P1_0."""
    return _layer(mesh, space, quad, _pairs.KERNEL_V, OperatorKind.V)


def assemble_mod_single_layer(mesh: TriangleMesh, space="P0", quad: QuadConfig = DEFAULT_QUAD) -> GalerkinMatrix:
    """Galerkin matrix of ``V-bar`` (kernel ``2 S_a / (pi^2 |x-y|)``)."""
    return _layer(mesh, space, quad, _pairs.KERNEL_VBAR, OperatorKind.VBAR)


def assemble_hypersingular(mesh: TriangleMesh, space="P1_0", quad: QuadConfig = DEFAULT_QUAD) -> GalerkinMatrix:
    """Galerkin matrix of ``W`` through the curl-curl single-layer form on P1_0."""
    space = _as_space(mesh, space)
    if space.kind is not SpaceKind.P1_0:
        raise ValueError("the hypersingular operator is discretized on P1_0 only")
    _, _, C = _pair_pass(mesh, _pairs.KERNEL_V, quad, want_curl=True)
    return _galerkin(OperatorKind.W, space, C, mesh)


def assemble_mod_hypersingular(mesh: TriangleMesh, space="P1", quad: QuadConfig = DEFAULT_QUAD,
                               q: np.ndarray | None = None) -> GalerkinMatrix:
    """Galerkin matrix of the regularized ``W-bar`` form on P1.

    Curl-curl part with kernel ``2 S_a / (pi^2 |x-y|)`` plus the rank-one
    term ``2/(a pi^2) q q^T`` where ``q`` is the dual weight vector.
    """
    space = _as_space(mesh, space)
    if space.kind is SpaceKind.P0:
        raise ValueError("W-bar needs a continuous space")
    _, _, C = _pair_pass(mesh, _pairs.KERNEL_VBAR, quad, want_curl=True)
    G = _galerkin(OperatorKind.WBAR, space, C, mesh)
    q = dual_weight_vector(mesh, space) if q is None else q
    G.entries += (2.0 / (mesh.a * np.pi ** 2)) * np.multiply.outer(q, q)
    return G


def assemble_pair(mesh: TriangleMesh, kernel: str = "V", quad: QuadConfig = DEFAULT_QUAD):
    """P1 layer matrix and P1 curl-curl matrix from a single pass (full vertex index)."""
    kid = _pairs.KERNEL_V if kernel == "V" else _pairs.KERNEL_VBAR
    _, A, C = _pair_pass(mesh, kid, quad, want_p1=True, want_curl=True)
    return A, C


# ---------------------------------------------------------------- file format

MAGIC = b"DBIO1\n"


def write_matrix(path_or_file, G: GalerkinMatrix) -> None:
    rows, cols = G.entries.shape
    header = f"{rows} {cols} {G.operator} {G.trial.kind.value} {G.level} {G.a!r}\n".encode()
    payload = np.ascontiguousarray(G.entries, dtype="<f8").tobytes()
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "wb") as fh:
            fh.write(MAGIC + header + payload)
    else:
        path_or_file.write(MAGIC + header + payload)


@dataclass(frozen=True)
class MatrixFile:
    rows: int
    cols: int
    operator: str
    space: str
    level: int
    a: float
    entries: np.ndarray


def read_matrix(path_or_file) -> MatrixFile:
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "rb") as fh:
            data = fh.read()
    else:
        data = path_or_file.read()
    if not data.startswith(MAGIC):
        raise ValueError("not a DBIO1 matrix file")
    buf = io.BytesIO(data[len(MAGIC):])
    fields = buf.readline().decode().split()
    if len(fields) != 6:
        raise ValueError("malformed DBIO1 header")
    rows, cols = int(fields[0]), int(fields[1])
    body = np.frombuffer(buf.read(), dtype="<f8")
    if body.size != rows * cols:
        raise ValueError("DBIO1 payload size does not match header")
    return MatrixFile(rows, cols, fields[2], fields[3], int(fields[4]), float(fields[5]),
                      body.reshape(rows, cols).astype(float))
