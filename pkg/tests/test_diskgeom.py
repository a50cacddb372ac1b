import numpy as np
import pytest
from scipy import integrate

from diskbio import assembly as asm
from diskbio.diskgeom import (
    MeshError, QuadRule, gauss01, mesh_disk, psh_project, singular_pair_quad, triangle_quad,
    weighted_disk_quad, weighted_rule_polar,
)
from diskbio.specfun import psh_rt


def triangle_potential(P, x):
    """Closed-form ``int_T 1/|x - y| dy`` for ``x`` in the plane of the counterclockwise triangle ``P``."""
    total = 0.0
    for k in range(3):
        A, B = P[k], P[(k + 1) % 3]
        tau = (B - A) / np.linalg.norm(B - A)
        h = float((A - x) @ np.array([tau[1], -tau[0]]))
        if abs(h) < 1e-300:
            continue
        t1, t2 = float((A - x) @ tau), float((B - x) @ tau)
        total += h * (np.arcsinh(t2 / abs(h)) - np.arcsinh(t1 / abs(h)))
    return total


def pair_oracle(P, Q):
    """``(1/4pi) int_P int_Q 1/|x - y|``: closed form inner integral, adaptive outer one."""
    e1, e2 = P[1] - P[0], P[2] - P[0]
    det = abs(e1[0] * e2[1] - e1[1] * e2[0])
    g = lambda v, u: det * triangle_potential(Q, P[0] + u * e1 + v * e2)  # noqa: E731
    val, _ = integrate.dblquad(g, 0, 1, 0, lambda u: 1 - u, epsabs=1e-13, epsrel=1e-11)
    return val / (4 * np.pi)


def ref_monomial(p, q):
    # int over {0 <= x2 <= x1 <= 1} of x1^p x2^q
    return 1.0 / ((q + 1) * (p + q + 2))


@pytest.mark.parametrize("level,nv,nt", [(0, 7, 6), (1, 19, 24), (2, 61, 96), (4, 817, 1536)])
def test_mesh_counts(level, nv, nt):
    m = mesh_disk(1.0, level)
    assert (m.n_vertices, m.n_triangles) == (nv, nt)
    assert np.all(m.areas > 0)


def test_mesh_boundary_on_circle_and_scaling():
    m = mesh_disk(2.0, 3)
    rb = np.hypot(*m.vertices[m.boundary_vertex].T)
    assert np.allclose(rb, 2.0)
    assert np.all(np.hypot(*m.vertices[~m.boundary_vertex].T) < 2.0)
    s = m.scaled(0.5)
    assert s.a == 1.0 and np.allclose(s.areas, m.areas / 4)
    assert mesh_disk(1.0, 3).max_edge_length() < mesh_disk(1.0, 2).max_edge_length()
    with pytest.raises(ValueError):
        mesh_disk(1.0, -1)


def test_mesh_area_converges_to_disk():
    errs = [np.pi - mesh_disk(1.0, k).areas.sum() for k in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2] > 0
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_locate_recovers_points():
    m = mesh_disk(1.0, 3)
    rng = np.random.default_rng(0)
    t = rng.integers(0, m.n_triangles, 40)
    b = rng.dirichlet(np.ones(3), 40)
    pts = np.einsum("nk,nkd->nd", b, m.vertices[m.triangles[t]])
    tri, bary = m.locate(pts)
    back = np.einsum("nk,nkd->nd", bary, m.vertices[m.triangles[tri]])
    assert np.allclose(back, pts) and np.allclose(bary.sum(axis=1), 1.0)
    with pytest.raises(MeshError):
        m.locate(np.array([[3.0, 0.0]]))


@pytest.mark.parametrize("order", range(1, 11))
def test_triangle_rule_exactness(order):
    rule = triangle_quad(order)
    x1, x2 = rule.nodes.T
    assert np.all(x2 >= -1e-14) and np.all(x2 <= x1 + 1e-14)
    for p in range(order + 1):
        for q in range(order + 1 - p):
            assert np.sum(rule.weights * x1 ** p * x2 ** q) == pytest.approx(ref_monomial(p, q), rel=1e-12)


def test_rule_validation():
    with pytest.raises(ValueError):
        triangle_quad(11)
    with pytest.raises(ValueError):
        singular_pair_quad("adjacent", 4)
    with pytest.raises(ValueError):
        singular_pair_quad("edge", 1)
    x, w = gauss01(5)
    assert w.sum() == pytest.approx(1.0) and np.all((x > 0) & (x < 1))


@pytest.mark.parametrize("relation", ["coincident", "edge", "vertex", "far"])
def test_pair_rules_integrate_smooth_products(relation):
    rule = singular_pair_quad(relation, 5)
    assert isinstance(rule, QuadRule)
    x1, x2, y1, y2 = rule.nodes.T
    assert rule.weights.sum() == pytest.approx(0.25, rel=1e-13)
    val = np.sum(rule.weights * x1 ** 2 * y2)
    assert val == pytest.approx(ref_monomial(2, 0) * ref_monomial(0, 1), rel=1e-12)


def test_pair_oracle_sanity():
    P = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]])
    x = np.array([2.0, 1.0])
    e1, e2 = P[1] - P[0], P[2] - P[0]
    det = abs(e1[0] * e2[1] - e1[1] * e2[0])
    g = lambda v, u: det / np.linalg.norm(x - (P[0] + u * e1 + v * e2))  # noqa: E731
    brute, _ = integrate.dblquad(g, 0, 1, 0, lambda u: 1 - u, epsabs=1e-13)
    assert triangle_potential(P, x) == pytest.approx(brute, rel=1e-12)


@pytest.fixture(scope="module")
def level1_v():
    m = mesh_disk(1.0, 1)
    hi = asm.QuadConfig(singular_order=8, regular_order=10, near_order=10, far_order=10)
    return m, asm.assemble_single_layer(m, "P0").entries, asm.assemble_single_layer(m, "P0", hi).entries


# frozen oracle values of (1/4pi) int int 1/|x-y| for level-1 pairs sharing 3, 2 and 1 vertices
@pytest.mark.parametrize("shared", [3, 2, 1])
def test_singular_pairs_against_analytic_oracle(level1_v, shared):
    m, V, V_hi = level1_v
    ii, jj, cnt = m.pair_relations()
    k = np.flatnonzero(cnt == shared)[0]
    i, j = ii[k], jj[k]
    ref = pair_oracle(m.vertices[m.triangles[i]], m.vertices[m.triangles[j]])
    assert V[i, j] == pytest.approx(ref, rel=2e-6)
    assert abs(V_hi[i, j] - ref) <= abs(V[i, j] - ref) + 1e-15


def test_far_pair_against_analytic_oracle(level1_v):
    m, V, V_hi = level1_v
    ii, jj, _ = m.pair_relations()
    touching = set(zip(ii.tolist(), jj.tolist()))
    i, j = next((0, j) for j in range(m.n_triangles) if (0, j) not in touching)
    ref = pair_oracle(m.vertices[m.triangles[i]], m.vertices[m.triangles[j]])
    # nearest non-touching neighbours: default near tier, then order 10
    assert V[i, j] == pytest.approx(ref, rel=5e-5)
    assert V_hi[i, j] == pytest.approx(ref, rel=1e-8)


def test_weighted_disk_rule_moments():
    rule = weighted_disk_quad(1.0, 32, 64)
    r, th, om = weighted_rule_polar(rule)
    # int 1/omega = 2 pi a, int r^2/omega = 4 pi / 3
    assert rule.weights.sum() == pytest.approx(2 * np.pi, rel=1e-14)
    assert np.sum(rule.weights * r ** 2) == pytest.approx(4 * np.pi / 3, rel=1e-14)
    big = weighted_disk_quad(3.0, 32, 64)
    assert big.weights.sum() == pytest.approx(6 * np.pi, rel=1e-14)
    with pytest.raises(ValueError):
        weighted_disk_quad(1.0, 0, 4)


def test_psh_project_recovers_coefficient():
    rule = weighted_disk_quad(1.0, 48, 64)
    f = lambda r, t: 3.0 * psh_rt(4, 2, r, t) - 0.5 * psh_rt(2, 0, r, t)  # noqa: E731
    assert psh_project(f, (4, 2), rule) == pytest.approx(1.5, abs=1e-12)
    assert psh_project(f, (2, 0), rule) == pytest.approx(-0.25, abs=1e-12)
    with pytest.raises(ValueError):
        psh_project(f, (2, 0), triangle_quad(3))
