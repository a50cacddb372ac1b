import csv
import json

import numba
import numpy as np
import pytest

from diskbio import assembly as asm
from diskbio.cli import ConfigError, RunConfig, _parse_levels, load_config, run


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_levels():
    assert _parse_levels("2-5") == [2, 3, 4, 5]
    assert _parse_levels("2, 4") == [2, 4]


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# demo\na = 2.0\nlevels = 2,3  # two levels\nl_max = 4\n")
    cfg = load_config(p)
    assert (cfg.a, cfg.levels, cfg.l_max) == (2.0, [2, 3], 4)
    p.write_text("a = 1\nbogus = 3\n")
    with pytest.raises(ConfigError, match=":2:"):
        load_config(p)
    p.write_text("a = -1\n")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        RunConfig(singular_order=9).validate()


def test_eigs(tmp_path):
    out = tmp_path / "eigs.csv"
    assert run(["eigs", "--lmax", "6", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 49 and rows[0]["recursion_residual"] == "nan"
    assert float(rows[0]["lambda"]) == pytest.approx(np.pi, rel=1e-15)
    assert max(abs(float(r["recursion_residual"])) for r in rows[1:]) < 1e-12


def test_mesh(tmp_path):
    assert run(["mesh", "--level", "2", "--a", "3", "--out", str(tmp_path)]) == 0
    verts = read_csv(tmp_path / "vertices.csv")
    tris = read_csv(tmp_path / "triangles.csv")
    assert len(verts) == 61 and len(tris) == 96
    rb = [np.hypot(float(v["x"]), float(v["y"])) for v in verts if v["boundary"] == "1"]
    assert np.allclose(rb, 3.0)


@pytest.mark.parametrize("op,space,n", [("V", None, 96), ("Wbar", None, 61), ("W", None, 37), ("mass", "P0", 96)])
def test_assemble(tmp_path, op, space, n):
    out = tmp_path / f"{op}.dbio"
    argv = ["assemble", "--operator", op, "--level", "2", "--out", str(out)]
    if space:
        argv += ["--space", space]
    assert run(argv) == 0
    mf = asm.read_matrix(out)
    assert (mf.rows, mf.cols, mf.operator, mf.level) == (n, n, op, 2)
    assert np.allclose(mf.entries, mf.entries.T)


def test_assemble_needs_output():
    assert run(["assemble", "--operator", "V", "--level", "1"]) == 2


@pytest.mark.parametrize("suite", ["kernels", "wolfe", "vbar", "wbar1"])
def test_verify_suites_pass(tmp_path, suite):
    out = tmp_path / f"{suite}.csv"
    assert run(["verify", "--suite", suite, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows and all(float(r["rel_err"]) <= 1e-3 for r in rows)


def test_verify_reports_failures(tmp_path):
    # the top-order W-bar pairs miss the eigenvalue by a factor two
    out = tmp_path / "wbar.csv"
    assert run(["verify", "--suite", "wbar", "--out", str(out)]) == 1
    rows = {(r["l"], r["m"]): float(r["rel_err"]) for r in read_csv(out)}
    assert rows[("2", "0")] < 1e-6 and rows[("1", "1")] == pytest.approx(0.5, rel=1e-6)
    assert run(["verify", "--suite", "wolfe", "--tol", "1e-20", "--out", str(tmp_path / "w.csv")]) == 1


def test_precond(tmp_path):
    out = tmp_path / "study.json"
    assert run(["precond", "--levels", "1,2", "--pair", "W,Vbar", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["level"] for r in rows] == [1, 2] and rows[1]["dofs"] == 37


def test_usage_errors(monkeypatch, tmp_path):
    assert run(["frobnicate"]) == 2
    assert run(["verify", "--suite", "nope"]) == 2
    assert run(["eigs", "--config", str(tmp_path / "missing.cfg")]) == 2
    monkeypatch.setenv("DISKBIO_THREADS", "many")
    assert run(["eigs", "--lmax", "1", "--out", str(tmp_path / "e.csv")]) == 2
    monkeypatch.setenv("DISKBIO_THREADS", "1")
    try:
        assert run(["eigs", "--lmax", "1", "--out", str(tmp_path / "e.csv")]) == 0
        assert numba.get_num_threads() == 1
    finally:
        numba.set_num_threads(numba.config.NUMBA_NUM_THREADS)


def test_empty_config_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    assert load_config(p) == RunConfig().validate()


def test_config_radius_reaches_mesh(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("a = 2.0\nlevel = 1\n")
    assert run(["mesh", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 0
    xs = [float(v["x"]) for v in read_csv(tmp_path / "m" / "vertices.csv")]
    assert max(xs) == pytest.approx(2.0)


def test_eigs_output_is_reproducible(tmp_path):
    run(["eigs", "--lmax", "10", "--out", str(tmp_path / "a.csv")])
    run(["eigs", "--lmax", "10", "--out", str(tmp_path / "b.csv")])
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b and a.count(b"\n") == 122
