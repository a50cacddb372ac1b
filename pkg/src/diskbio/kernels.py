"""Pointwise kernels of V, W, V-bar, W-bar, their PSH series and 1-D integral oracles."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from .specfun import DomainError, PolarPoint, lam, normalized_legendre_table, poisson_kernel


class SingularityError(DomainError):
    """Kernel evaluated where it is singular (diagonal or rim)."""


class AccuracyError(RuntimeError):
    """A numeric oracle did not reach its tolerance."""


class OperatorKind(str, Enum):
    V = "V"
    W = "W"
    VBAR = "Vbar"
    WBAR = "Wbar"

    def __str__(self):
        return self.value

    @property
    def needs_radius(self) -> bool:
        return self in (OperatorKind.VBAR, OperatorKind.WBAR)

    @property
    def series_parity(self) -> int:
        """Parity of ``l + m`` retained in the PSH series (0 even, 1 odd)."""
        return 0 if self in (OperatorKind.V, OperatorKind.WBAR) else 1


@dataclass(frozen=True)
class KernelConfig:
    a: float = 1.0
    coincident_tol: float | None = None
    series_L: int = 200
    abel_rho: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("radius must be positive")
        if not 0 < self.abel_rho <= 1:
            raise ValueError("abel_rho must lie in (0, 1]")
        if self.coincident_tol is None:
            object.__setattr__(self, "coincident_tol", 1e-12 * self.a)

    @property
    def tol(self) -> float:
        return float(self.coincident_tol)


_TWO_PI2 = 2.0 / np.pi ** 2


def _kind(kind) -> OperatorKind:
    return kind if isinstance(kind, OperatorKind) else OperatorKind(kind)


def _omega(a, r):
    return np.sqrt(np.clip((a - r) * (a + r), 0.0, None))


def s_values(a: float, x: np.ndarray, y: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Vectorised cut-off ``S_a`` for Cartesian point arrays of shape ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tol = 1e-12 * a if tol is None else tol
    rx = np.hypot(x[..., 0], x[..., 1])
    ry = np.hypot(y[..., 0], y[..., 1])
    if np.any(rx > a * (1 + 1e-12)) or np.any(ry > a * (1 + 1e-12)):
        raise DomainError("S_a is defined on the closed disk only")
    d = np.hypot(x[..., 0] - y[..., 0], x[..., 1] - y[..., 1])
    num = _omega(a, rx) * _omega(a, ry)
    # arctan2 gives pi/2 for d = 0 with num > 0 and 0 whenever num = 0
    return np.arctan2(num, a * np.where(d <= tol, 0.0, d))


def s_fun(a: float, x: PolarPoint, y: PolarPoint, tol: float | None = None) -> float:
    """``S_a(x, y) = arctan(omega_a(x) omega_a(y) / (a |x - y|))`` in ``[0, pi/2]``."""
    return float(s_values(a, x.xy, y.xy, tol))


def kernel_values(kind, a: float, x: np.ndarray, y: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Vectorised kernels on Cartesian point arrays (no singularity checks)."""
    kind = _kind(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.hypot(x[..., 0] - y[..., 0], x[..., 1] - y[..., 1])
    if kind is OperatorKind.V:
        return 1.0 / (4 * np.pi * d)
    if kind is OperatorKind.W:
        return 1.0 / (4 * np.pi * d ** 3)
    S = s_values(a, x, y, tol)
    if kind is OperatorKind.VBAR:
        return _TWO_PI2 * S / d
    wx = _omega(a, np.hypot(x[..., 0], x[..., 1]))
    wy = _omega(a, np.hypot(y[..., 0], y[..., 1]))
    return _TWO_PI2 * (a / (d * d * wx * wy) + S / d ** 3)


def kernel_eval(kind, cfg: KernelConfig, x: PolarPoint, y: PolarPoint) -> float:
    """Pointwise kernel value; V-bar and W-bar carry the ``+2/pi^2`` prefactor."""
    kind = _kind(kind)
    for p in (x, y):
        if kind.needs_radius and p.r > cfg.a * (1 + 1e-12):
            raise DomainError("point outside the closed disk")
    if np.hypot(*(x.xy - y.xy)) <= cfg.tol:
        raise SingularityError("kernel evaluated on the diagonal x = y")
    if kind is OperatorKind.WBAR and (x.omega(cfg.a) == 0.0 or y.omega(cfg.a) == 0.0):
        raise SingularityError("W-bar kernel is singular on the rim")
    return float(kernel_values(kind, cfg.a, x.xy, y.xy, cfg.tol))


def kernel_series(kind, x: PolarPoint, y: PolarPoint, L: int = 200, abel_rho: float = 1.0) -> float:
    """Abel-damped partial sum of the symmetric PSH expansion on the unit disk.

    Degree ``l`` is weighted by ``abel_rho**l``; the modes kept have
    ``l + m`` even for V and W-bar and odd for W and V-bar.
    """
    kind = _kind(kind)
    if not 0 < abel_rho <= 1:
        raise ValueError("abel_rho must lie in (0, 1]")
    if L > 200 or L < 0:
        raise ValueError("series degree must lie in 0..200")
    for p in (x, y):
        if p.r >= 1.0:
            raise DomainError("series evaluation needs interior points")
    wx, wy = x.omega(), y.omega()
    Nx = normalized_legendre_table(L, wx, x.r)
    Ny = normalized_legendre_table(L, wy, y.r)
    dth = x.theta - y.theta
    l = np.arange(L + 1)[:, None]
    m = np.arange(L + 1)[None, :]
    keep = (m <= l) & ((l + m) % 2 == kind.series_parity)
    lam_tab = np.zeros((L + 1, L + 1))
    ll, mm = np.nonzero(keep)
    lam_tab[ll, mm] = [lam((a, b)) for a, b in zip(ll.tolist(), mm.tolist())]
    if kind is OperatorKind.V:
        coef = lam_tab / 4
    elif kind is OperatorKind.VBAR:
        coef = lam_tab
    else:
        with np.errstate(divide="ignore"):
            coef = np.where(keep, (1.0 if kind is OperatorKind.W else 4.0) / np.where(keep, lam_tab, 1.0), 0.0)
        coef = coef / (wx * wy)
    # y(x) conj y(y) + conj y(x) y(y), summed over +-m, is 2 N N cos(m dtheta) per signed m
    mult = np.where(m == 0, 1.0, 2.0)
    terms = coef * keep * mult * 2.0 * Nx * Ny * np.cos(m * dth)
    return float(np.sum(terms.sum(axis=1) * abel_rho ** np.arange(L + 1)))


def kernel_series_abel(kind, x: PolarPoint, y: PolarPoint, L: int = 200,
                       rhos: tuple[float, ...] = (0.87, 0.90, 0.93, 0.96)) -> float:
    """Abel-summed series extrapolated to ``rho = 1`` by polynomial fit in ``1 - rho``."""
    vals = [kernel_series(kind, x, y, L, r) for r in rhos]
    h = 1.0 - np.asarray(rhos)
    coef = np.polyfit(h, vals, len(rhos) - 1)
    return float(coef[-1])


def _radial_integrand(x: PolarPoint, y: PolarPoint):
    """Integrand of the radial representation after ``s = R cosh u``."""
    R = max(x.r, y.r)
    r_min = min(x.r, y.r)
    dth = x.theta - y.theta
    prod = x.r * y.r

    def f(u):
        s = R * np.cosh(u)
        # sqrt(s^2 - R^2) = R sinh u cancels against ds = R sinh u du
        other = np.sqrt((s - r_min) * (s + r_min))
        rho = prod / (s * s)
        if rho == 0.0:
            p = 1.0 / (2 * np.pi)
        elif rho >= 1.0:
            return 0.0
        else:
            p = float(poisson_kernel(rho, dth))
        return p / other

    return f, R


def _quad(f, lo, hi, what):
    val, err = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400)
    if not np.isfinite(val) or err > 1e-7 * max(abs(val), 1.0):
        raise AccuracyError(f"{what}: quadrature did not converge (estimate {err:.2e})")
    return val


def li_rong_alpha1(x: PolarPoint, y: PolarPoint) -> float:
    """``(1/pi) int_R^inf p(r_x r_y / s^2, dtheta) / (sqrt(s^2-r_x^2) sqrt(s^2-r_y^2)) ds``.

    Equals ``1 / (4 pi |x - y|)`` for distinct interior points.
    """
    if np.hypot(*(x.xy - y.xy)) <= 1e-12:
        raise SingularityError("points coincide")
    f, R = _radial_integrand(x, y)
    # the integrand decays like exp(-u); the tail beyond u = 45 is below 1e-19
    return _quad(f, 0.0, 45.0, "Li-Rong integral") / np.pi


def primitive_integral(a: float, x: PolarPoint, y: PolarPoint) -> float:
    """``int_R^a p(r_x r_y / s^2, dtheta) / (sqrt(s^2-r_x^2) sqrt(s^2-r_y^2)) ds``."""
    if np.hypot(*(x.xy - y.xy)) <= 1e-12 * a:
        raise SingularityError("points coincide")
    if max(x.r, y.r) >= a:
        raise DomainError("primitive check needs interior points")
    f, R = _radial_integrand(x, y)
    return _quad(f, 0.0, float(np.arccosh(a / R)), "arctan primitive")


def primitive_check_vbar(a: float, x: PolarPoint, y: PolarPoint) -> float:
    """Radial integral minus its closed form ``S_a(x, y) / (2 pi |x - y|)``."""
    d = float(np.hypot(*(x.xy - y.xy)))
    return primitive_integral(a, x, y) - s_fun(a, x, y) / (2 * np.pi * d)
