import numpy as np
import pytest

from diskbio import assembly as asm
from diskbio.diskgeom import mesh_disk


@pytest.fixture(scope="session")
def mesh4():
    return mesh_disk(1.0, 4)


@pytest.fixture(scope="session")
def mesh2():
    return mesh_disk(1.0, 2)


@pytest.fixture(scope="session")
def level4_ops(mesh4):
    """Full-vertex P1 matrices of V, W (curl-curl), V-bar and the curl-curl part of W-bar."""
    V, W = asm.assemble_pair(mesh4, "V")
    Vb, Cb = asm.assemble_pair(mesh4, "Vbar")
    P1 = asm.FunctionSpace("P1", mesh4)
    q = asm.dual_weight_vector(mesh4, P1)
    return {"V": V, "W": W, "Vbar": Vb, "Wbar": Cb + (2 / np.pi ** 2) * np.outer(q, q), "q": q,
            "M": asm.assemble_mass(mesh4, P1, P1), "P1": P1}


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
