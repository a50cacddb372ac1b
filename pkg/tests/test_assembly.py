import io

import numpy as np
import pytest
from scipy import integrate, special

from diskbio import assembly as asm
from diskbio.diskgeom import MeshError, TriangleMesh, mesh_disk
from diskbio.specfun import psh_rt


def test_function_space_dofs(mesh2):
    assert asm.FunctionSpace("P0", mesh2).dof_count == 96
    assert asm.FunctionSpace("P1", mesh2).dof_count == 61
    assert asm.FunctionSpace("P1_0", mesh2).dof_count == 61 - 24
    lone = TriangleMesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                        np.array([True, True, True]))
    with pytest.raises(MeshError):
        asm.FunctionSpace("P1_0", lone)
    with pytest.raises(ValueError):
        asm.FunctionSpace("P2", mesh2)


def test_quad_config_validation():
    with pytest.raises(ValueError):
        asm.QuadConfig(singular_order=1)
    with pytest.raises(ValueError):
        asm.QuadConfig(mid_ratio=6.0, far_ratio=5.0)


def test_surface_curl_of_linear_function(mesh2):
    # curl f = e3 x grad f = (-df/dy, df/dx); for f = 2x - 3y that is (3, 2)
    curls = asm.p1_surface_curl(mesh2)
    vals = 2 * mesh2.vertices[:, 0] - 3 * mesh2.vertices[:, 1]
    per_tri = np.einsum("tk,tkd->td", vals[mesh2.triangles], curls)
    assert np.allclose(per_tri, [3.0, 2.0])
    assert np.allclose(curls.sum(axis=1), 0.0)


def test_mass_matrices(mesh2):
    P0, P1, P10 = (asm.FunctionSpace(k, mesh2) for k in ("P0", "P1", "P1_0"))
    area = mesh2.areas.sum()
    M11 = asm.assemble_mass(mesh2, P1, P1)
    assert np.ones(61) @ M11 @ np.ones(61) == pytest.approx(area, rel=1e-14)
    x = mesh2.vertices[:, 0]
    # int x^2 over the polygon, exact for the P1 interpolant of x
    ref = sum(np.sum(mesh2.areas * (a * a + b * b + c * c + a * b + b * c + c * a) / 6.0)
              for a, b, c in [tuple(mesh2.vertices[mesh2.triangles][:, k, 0] for k in range(3))])
    assert x @ M11 @ x == pytest.approx(ref, rel=1e-13)
    M01 = asm.assemble_mass(mesh2, P0, P1)
    assert M01.shape == (96, 61) and M01.sum() == pytest.approx(area, rel=1e-14)
    assert asm.assemble_mass(mesh2, P10, P10).shape == (37, 37)
    assert np.allclose(asm.assemble_mass(mesh2, P0, P0), np.diag(mesh2.areas))


def test_load_vectors(mesh2):
    P1 = asm.FunctionSpace("P1", mesh2)
    assert asm.load_vector(mesh2, P1, lambda x, y: np.ones_like(x)).sum() == pytest.approx(mesh2.areas.sum())
    # weighted loads cover the true disk, so the total is int 1/omega = 2 pi
    assert asm.dual_weight_vector(mesh2, P1).sum() == pytest.approx(2 * np.pi, rel=1e-10)
    P0 = asm.FunctionSpace("P0", mesh2)
    assert asm.weighted_load(mesh2, P0, lambda x, y: x * x + y * y).sum() == pytest.approx(4 * np.pi / 3, rel=1e-10)


def test_projection_of_smooth_function(mesh4):
    P1 = asm.FunctionSpace("P1", mesh4)
    f = lambda x, y: np.cos(x) * y  # noqa: E731
    err = np.max(np.abs(P1.project(f) - P1.interpolate(f)))
    assert err < 5e-3


def test_layer_matrices_symmetric_and_positive(level4_ops):
    for name in ("V", "Vbar", "Wbar"):
        A = level4_ops[name]
        assert np.allclose(A, A.T, rtol=0, atol=1e-15 * np.abs(A).max())
        np.linalg.cholesky(A)


def test_curl_curl_annihilates_constants(level4_ops):
    W = level4_ops["W"]
    assert np.abs(W @ np.ones(len(W))).max() <= 1e-12 * np.abs(W).max()


def test_single_layer_energy_of_constant(level4_ops, mesh4):
    # the disk potential of 1 is 4 E(r); (1/4pi) int 8 pi r E(r) dr = 4/3; the polygon misses a sliver
    one = np.ones(mesh4.n_vertices)
    ref = 2 * integrate.quad(lambda r: r * special.ellipe(r * r), 0, 1)[0]
    assert ref == pytest.approx(4 / 3, rel=1e-12)
    assert one @ level4_ops["V"] @ one == pytest.approx(ref, rel=3e-3)


def test_wbar_of_constant_is_exact(level4_ops):
    one = np.ones(len(level4_ops["q"]))
    assert one @ level4_ops["Wbar"] @ one == pytest.approx(8.0, rel=1e-10)


def test_hypersingular_energy_of_odd_mode(level4_ops, mesh4):
    # <W y_1^0, y_1^0> = 1 / (2 lambda_1^0) = pi / 8
    x, y = mesh4.vertices.T
    u = psh_rt(1, 0, np.hypot(x, y), np.arctan2(y, x)).real
    assert u @ level4_ops["W"] @ u == pytest.approx(np.pi / 8, rel=1e-2)


def test_mod_hypersingular_energy_of_even_mode(level4_ops, mesh4):
    # <W-bar y_2^0, y_2^0> = 2 / lambda_2^0 = 8 / pi
    x, y = mesh4.vertices.T
    u = psh_rt(2, 0, np.hypot(x, y), np.arctan2(y, x)).real
    assert u @ level4_ops["Wbar"] @ u == pytest.approx(8 / np.pi, rel=5e-3)


def test_public_assemblers_agree_with_pair_pass(mesh2):
    V, C = asm.assemble_pair(mesh2, "V")
    P10 = asm.FunctionSpace("P1_0", mesh2)
    idx = P10.dofs
    G = asm.assemble_single_layer(mesh2, "P1_0")
    assert G.shape == (37, 37) and np.allclose(G.entries, V[np.ix_(idx, idx)])
    assert np.allclose(asm.assemble_hypersingular(mesh2).entries, C[np.ix_(idx, idx)])
    with pytest.raises(ValueError):
        asm.assemble_hypersingular(mesh2, "P1")
    with pytest.raises(ValueError):
        asm.assemble_mod_hypersingular(mesh2, "P0")
    u = np.arange(37.0)
    assert G.quadratic_form(u) == pytest.approx(u @ G.entries @ u)
    assert np.asarray(G).shape == (37, 37)


def test_p0_and_p1_single_layer_consistent(mesh2):
    # the constant function has the same energy in both spaces
    V0 = asm.assemble_single_layer(mesh2, "P0").entries
    V1 = asm.assemble_single_layer(mesh2, "P1").entries
    assert V0.sum() == pytest.approx(V1.sum(), rel=1e-6)


def test_quadrature_self_convergence(mesh2):
    hi = asm.QuadConfig(regular_order=8, singular_order=8, near_order=8, far_order=6)
    for kernel in ("V", "Vbar"):
        A = asm.assemble_pair(mesh2, kernel)[0]
        B = asm.assemble_pair(mesh_disk(1.0, 2), kernel, hi)[0]
        assert np.abs(A - B).max() <= 2e-3 * np.abs(B).max()


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_radius_scaling(a):
    m1, ma = mesh_disk(1.0, 2), mesh_disk(a, 2)
    for fn, power in ((asm.assemble_single_layer, 3), (asm.assemble_mod_single_layer, 3),
                      (asm.assemble_hypersingular, 1), (asm.assemble_mod_hypersingular, 1)):
        A1, Aa = fn(m1).entries, fn(ma).entries
        assert np.allclose(Aa, a ** power * A1, rtol=1e-9, atol=1e-14 * np.abs(Aa).max())


def test_matrix_file_roundtrip(tmp_path, mesh2):
    G = asm.assemble_mod_single_layer(mesh2, "P0")
    path = tmp_path / "vbar.dbio"
    asm.write_matrix(path, G)
    back = asm.read_matrix(path)
    assert (back.rows, back.cols, back.operator, back.space, back.level, back.a) == (96, 96, "Vbar", "P0", 2, 1.0)
    assert np.array_equal(back.entries, G.entries)
    buf = io.BytesIO()
    asm.write_matrix(buf, G)
    assert buf.getvalue().startswith(asm.MAGIC)
    with pytest.raises(ValueError):
        asm.read_matrix(io.BytesIO(b"NOPE\n"))
    with pytest.raises(ValueError):
        asm.read_matrix(io.BytesIO(buf.getvalue()[:-8]))


def test_single_layer_energy_of_weighted_constant(mesh4):
    # q = omega^{-1} y_0^0 gives <V q, q> = (lambda_0^0 / 4)(1/2) = pi/8
    P0 = asm.FunctionSpace("P0", mesh4)
    V = asm.assemble_single_layer(mesh4, P0)
    q = P0.project_weighted(lambda x, y: np.full_like(x, 1 / np.sqrt(4 * np.pi)))
    assert V.quadratic_form(q) == pytest.approx(np.pi / 8, rel=2e-2)


def test_wbar_energy_of_lowest_mode(level4_ops):
    u = np.full(len(level4_ops["q"]), 1 / np.sqrt(4 * np.pi))
    assert u @ level4_ops["Wbar"] @ u == pytest.approx(2 / np.pi, rel=1e-10)


def test_dual_weights_positive_and_stable():
    totals = []
    for lev in (2, 3, 4):
        m = mesh_disk(1.0, lev)
        q0 = asm.dual_weight_vector(m, asm.FunctionSpace("P0", m))
        assert np.all(q0 > 0)
        totals.append(q0.sum())
    assert np.ptp(totals) <= 1e-6


def test_assembly_is_deterministic():
    A = asm.assemble_pair(mesh_disk(1.0, 2), "Vbar")
    B = asm.assemble_pair(mesh_disk(1.0, 2), "Vbar")
    assert all(np.array_equal(a, b) for a, b in zip(A, B))
