"""Conjugate gradients, Lanczos extreme eigenvalues and the operator-preconditioning study."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg


class DefinitenessError(np.linalg.LinAlgError):
    """A matrix or operator expected to be SPD is not."""


@dataclass(frozen=True)
class SpectrumReport:
    lambda_min: float
    lambda_max: float
    lanczos_steps: int
    residual_tol: float

    @property
    def kappa(self) -> float:
        return self.lambda_max / self.lambda_min


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residuals: list[float] = field(default_factory=list)
    converged: bool = False

    def __iter__(self):
        # unpacks as (solution, iterations, residual history)
        return iter((self.x, self.iterations, self.residuals))


def _as_apply(op) -> Callable[[np.ndarray], np.ndarray]:
    if op is None:
        return lambda v: v
    if callable(op):
        return op
    return lambda v: op @ v


def cg(A, b: np.ndarray, tol: float = 1e-10, maxit: int | None = None, precond=None,
       x0: np.ndarray | None = None) -> CGResult:
    """Preconditioned CG; stops when ``|r| <= tol |b|``.

    ``A`` and ``precond`` may be arrays or callables.  A non-positive
    curvature ``p^T A p`` raises :class:`DefinitenessError`.
    """
    apply_a = _as_apply(A)
    apply_p = _as_apply(precond)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    maxit = 10 * n if maxit is None else maxit
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_a(x)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros(n), 0, [0.0], True)
    hist = [float(np.linalg.norm(r) / bnorm)]
    if hist[-1] <= tol:
        return CGResult(x, 0, hist, True)
    z = apply_p(r)
    p = z.copy()
    rz = float(r @ z)
    if rz <= 0:
        raise DefinitenessError("preconditioner is not positive definite")
    for it in range(1, maxit + 1):
        q = apply_a(p)
        curv = float(p @ q)
        if curv <= 0:
            raise DefinitenessError(f"non-positive curvature {curv:.3e} at iteration {it}")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * q
        hist.append(float(np.linalg.norm(r) / bnorm))
        if hist[-1] <= tol:
            return CGResult(x, it, hist, True)
        z = apply_p(r)
        rz_new = float(r @ z)
        if rz_new <= 0:
            raise DefinitenessError("preconditioner is not positive definite")
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CGResult(x, maxit, hist, False)


def _lanczos(apply_t, apply_g, n: int, steps: int, tol: float, seed: int = 0):
    """Lanczos for ``T`` self-adjoint in the ``G`` inner product (full reorthogonalization).

    Returns the extreme Ritz values and the number of steps used.
    """
    rng = np.random.default_rng(seed)
    steps = min(steps, n)
    Q = np.zeros((n, steps + 1))
    GQ = np.zeros((n, steps + 1))
    alpha = np.zeros(steps)
    beta = np.zeros(steps)
    v = rng.standard_normal(n)
    gv = apply_g(v)
    nrm2 = float(v @ gv)
    if nrm2 <= 0:
        raise DefinitenessError("inner-product matrix is not positive definite")
    Q[:, 0] = v / np.sqrt(nrm2)
    GQ[:, 0] = gv / np.sqrt(nrm2)
    prev = None
    k_used = steps
    for k in range(steps):
        w = apply_t(Q[:, k])
        alpha[k] = float(GQ[:, k] @ w)
        # two passes of classical Gram-Schmidt in the G inner product
        for _ in range(2):
            w -= Q[:, :k + 1] @ (GQ[:, :k + 1].T @ w)
        gw = apply_g(w)
        b2 = float(w @ gw)
        ritz = linalg.eigvalsh_tridiagonal(alpha[:k + 1], beta[:k]) if k > 0 else alpha[:1].copy()
        lo, hi = float(ritz[0]), float(ritz[-1])
        if prev is not None and k >= 4:
            if abs(lo - prev[0]) <= tol * abs(lo) and abs(hi - prev[1]) <= tol * abs(hi):
                k_used = k + 1
                break
        prev = (lo, hi)
        if b2 <= 1e-30 * max(1.0, abs(alpha[k])):
            # invariant subspace found
            k_used = k + 1
            break
        beta[k] = np.sqrt(b2)
        Q[:, k + 1] = w / beta[k]
        GQ[:, k + 1] = gw / beta[k]
    return lo, hi, k_used


def lanczos_extremes(A, B=None, steps: int = 300, tol: float = 1e-10, B_solve=None) -> SpectrumReport:
    """Extreme eigenvalues of ``B^{-1} A`` via Lanczos in the ``B`` inner product.

    ``B`` defaults to the identity; its inverse is applied through a
    Cholesky factorization unless ``B_solve`` is given.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if B is None:
        apply_g = lambda v: v  # noqa: E731
        solve_b = lambda v: v  # noqa: E731
    else:
        B = np.asarray(B, dtype=float)
        apply_g = lambda v: B @ v  # noqa: E731
        if B_solve is None:
            try:
                cf = linalg.cho_factor(B)
            except linalg.LinAlgError as exc:
                raise DefinitenessError("B is not positive definite") from exc
            solve_b = lambda v: linalg.cho_solve(cf, v)  # noqa: E731
        else:
            solve_b = B_solve
    lo, hi, k = _lanczos(lambda v: solve_b(A @ v), apply_g, n, steps, tol)
    if lo <= 0:
        raise DefinitenessError(f"non-positive Ritz value {lo:.3e}")
    return SpectrumReport(lo, hi, k, tol)


def preconditioned_extremes(A, apply_p, steps: int = 300, tol: float = 1e-10) -> SpectrumReport:
    """Extreme eigenvalues of ``P A`` (``P`` SPD) by Lanczos in the ``A`` inner product."""
    A = np.asarray(A, dtype=float)
    lo, hi, k = _lanczos(lambda v: apply_p(A @ v), lambda v: A @ v, A.shape[0], steps, tol)
    if lo <= 0:
        raise DefinitenessError(f"non-positive Ritz value {lo:.3e}")
    return SpectrumReport(lo, hi, k, tol)


def mass_sandwich(B: np.ndarray, M: np.ndarray):
    """Return ``v -> M^{-1} B M^{-1} v`` using one Cholesky factorization of ``M``."""
    try:
        cf = linalg.cho_factor(M)
    except linalg.LinAlgError as exc:
        raise DefinitenessError("mass matrix is not positive definite") from exc
    return lambda v: linalg.cho_solve(cf, B @ linalg.cho_solve(cf, v))


# ------------------------------------------------------------------ study


@dataclass(frozen=True)
class LevelRow:
    level: int
    dofs: int
    h: float
    kappa_raw: float
    kappa_pre: float
    iters_raw: int
    iters_pre: int

    def as_dict(self):
        return {"level": self.level, "dofs": self.dofs, "h": self.h, "kappa_raw": self.kappa_raw,
                "kappa_pre": self.kappa_pre, "iters_raw": self.iters_raw, "iters_pre": self.iters_pre}


@dataclass
class PrecondStudyResult:
    operator_pair: tuple[str, str]
    rows: list[LevelRow]
    solutions: dict = field(default_factory=dict, repr=False)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def precond_study(levels, operator_pair=("V", "Wbar"), rhs=None, a: float = 1.0, quad=None,
                  cg_tol: float = 1e-8, keep_solutions: bool = False) -> PrecondStudyResult:
    """Operator-preconditioning experiment across mesh levels.

    ``("V", "Wbar")`` solves the P1 single-layer system preconditioned by
    ``M^{-1} W-bar M^{-1}``; ``("W", "Vbar")`` solves the P1_0 hypersingular
    system preconditioned by ``M0^{-1} V-bar M0^{-1}``.  ``rhs(x, y)``
    defaults to the constant 1.
    """
    from . import assembly as asm
    from .diskgeom import mesh_disk

    pair = tuple(operator_pair)
    if pair not in (("V", "Wbar"), ("W", "Vbar")):
        raise ValueError(f"unsupported operator pair {operator_pair}")
    levels = list(levels)
    if levels != sorted(levels) or len(set(levels)) != len(levels):
        raise ValueError("levels must be strictly ascending")
    quad = quad or asm.DEFAULT_QUAD
    rhs = rhs or (lambda x, y: np.ones_like(x))
    rows, sols = [], {}
    for lev in levels:
        mesh = mesh_disk(a, lev)
        if pair == ("V", "Wbar"):
            space = asm.FunctionSpace("P1", mesh)
            Vfull, _ = asm.assemble_pair(mesh, "V", quad)
            A = Vfull
            _, C = asm.assemble_pair(mesh, "Vbar", quad)
            q = asm.dual_weight_vector(mesh, space)
            B = C + (2.0 / (a * np.pi ** 2)) * np.multiply.outer(q, q)
        else:
            space = asm.FunctionSpace("P1_0", mesh)
            idx = space.dofs
            Vb, C = asm.assemble_pair(mesh, "V", quad)
            A = C[np.ix_(idx, idx)]
            Vbar, _ = asm.assemble_pair(mesh, "Vbar", quad)
            B = Vbar[np.ix_(idx, idx)]
        M = asm.assemble_mass(mesh, space, space)
        apply_p = mass_sandwich(B, M)
        g = asm.load_vector(mesh, space, rhs)
        raw = lanczos_extremes(A)
        pre = preconditioned_extremes(A, apply_p)
        r_raw = cg(A, g, cg_tol)
        r_pre = cg(A, g, cg_tol, precond=apply_p)
        rows.append(LevelRow(lev, space.dof_count, mesh.max_edge_length(), raw.kappa, pre.kappa,
                             r_raw.iterations, r_pre.iterations))
        if keep_solutions:
            sols[lev] = (mesh, space, r_pre.x)
    return PrecondStudyResult(pair, rows, sols)
